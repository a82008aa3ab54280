#pragma once

#include "bfdr/core.hpp"
#include "bfdr/mc_engine.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace bfdr {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Sidedness { one_sided, two_sided };

struct DatasetDescriptor {
    std::filesystem::path path;
    std::string column = "p";
    std::optional<std::string> id_column;
    Sidedness sidedness = Sidedness::one_sided;
    // Sign of the estimated effect; needed to turn two-sided p-values into one-sided ones.
    std::optional<std::string> direction_column;
    bool selection_adjust = false;
    bool selection_inclusive = false;  // keep p <= 0.025 instead of p < 0.025
};

// Reads a comma-separated file with a header row. Rows with missing, non-numeric,
// or out-of-range p-values are rejected with their 1-based data row number.
PValueSample load_pvalues(const DatasetDescriptor& desc);

// Keeps one-sided p-values below 0.025 (or at most 0.025 when inclusive) and multiplies them by 40.
PValueSample selection_adjust(const PValueSample& sample, bool inclusive = false);

// Minimal RFC 4180 reader/writer helpers.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::string csv_escape(const std::string& field);

// Tabular output shared by every command. Cells are typed; absent cells are empty.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    bool operator==(const Table&) const = default;
};

enum class TableFormat { csv, json };

// Deterministic text rendering: doubles with 6 significant digits.
std::string format_double(double value);
std::string to_csv(const Table& table);
std::string to_json(const Table& table);
Table table_from_csv(const std::string& text);
Table table_from_json(const std::string& text);

void write_table(const Table& table, TableFormat format, const std::filesystem::path& path);
Table read_table(const std::filesystem::path& path, TableFormat format);

// Rounds every double cell to its 6-significant-digit rendering, i.e. what a
// written table reads back as.
Table rounded(const Table& table);

Table metrics_to_table(const MetricsTable& metrics);

// Summary line of one procedure on a real dataset.
struct RejectionSummary {
    std::string procedure;
    std::string family;
    double q = 0.0;
    double level = 0.0;
    std::size_t r = 0;
    std::size_t m = 0;
    double threshold = 0.0;
    std::optional<std::string> boundary_label;
    double pi0_used = 1.0;
    std::optional<double> est_lfdr_at_threshold;
    std::optional<double> sellke_alpha_at_threshold;
    std::optional<double> sellke_alpha_pi0_at_threshold;
};

// round(100 r / m)
std::int64_t rejection_percentage(std::size_t r, std::size_t m);

Table rejections_to_table(const std::vector<RejectionSummary>& rows);

}  // namespace bfdr
