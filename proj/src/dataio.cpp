#include "bfdr/dataio.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace bfdr {

namespace {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& text)
{
    const std::string s = trim(text);
    if (s.empty()) return std::nullopt;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double value = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::filesystem::path& path)
{
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError(path.string() + ": no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // a line holding nothing is skipped, not treated as a one-field record
        if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_record();
        } else if (c == '\r') {
            // CRLF: the '\n' closes the record
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw IoError("unterminated quoted field in CSV input");
    if (!field.empty() || !record.empty() || field_started) end_record();
    return records;
}

std::string csv_escape(const std::string& field)
{
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

PValueSample load_pvalues(const DatasetDescriptor& desc)
{
    if (!std::filesystem::exists(desc.path)) throw IoError("input file not found: " + desc.path.string());
    std::string text = read_file(desc.path);
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF) text.erase(0, 3);  // UTF-8 BOM
    const auto records = parse_csv(text);
    if (records.empty()) throw IoError(desc.path.string() + ": file is empty");

    std::vector<std::string> header;
    for (const auto& h : records.front()) header.push_back(trim(h));
    const std::size_t p_col = column_index(header, desc.column, desc.path);
    const auto id_col = desc.id_column ? std::optional(column_index(header, *desc.id_column, desc.path)) : std::nullopt;
    std::optional<std::size_t> dir_col;
    if (desc.sidedness == Sidedness::two_sided) {
        if (!desc.direction_column) {
            throw IoError(desc.path.string() +
                          ": two-sided p-values need an effect-direction column to become one-sided");
        }
        dir_col = column_index(header, *desc.direction_column, desc.path);
    }
    if (records.size() == 1) throw IoError(desc.path.string() + ": no data rows");

    PValueSample sample;
    if (id_col) sample.labels.emplace();
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::string where = desc.path.string() + ": row " + std::to_string(r);
        if (rec.size() != header.size()) {
            throw IoError(where + " has " + std::to_string(rec.size()) + " fields, header has " +
                          std::to_string(header.size()));
        }
        const auto p = parse_double(rec[p_col]);
        if (!p) throw IoError(where + ": missing or non-numeric p-value '" + rec[p_col] + "'");
        if (!(*p >= 0.0 && *p <= 1.0)) throw IoError(where + ": p-value " + trim(rec[p_col]) + " outside [0,1]");
        double value = *p;
        if (dir_col) {
            const auto dir = parse_double(rec[*dir_col]);
            if (!dir) throw IoError(where + ": missing or non-numeric effect direction");
            value = *dir >= 0.0 ? 0.5 * value : 1.0 - 0.5 * value;
        }
        sample.values.push_back(value);
        if (id_col) sample.labels->push_back(trim(rec[*id_col]));
    }
    validate(sample);
    return desc.selection_adjust ? selection_adjust(sample, desc.selection_inclusive) : sample;
}

PValueSample selection_adjust(const PValueSample& sample, bool inclusive)
{
    constexpr double cutoff = 0.025;
    constexpr double factor = 40.0;
    PValueSample out;
    if (sample.truth) out.truth.emplace();
    if (sample.labels) out.labels.emplace();
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double p = sample.values[i];
        if (inclusive ? p <= cutoff : p < cutoff) {
            out.values.push_back(std::min(p * factor, 1.0));
            if (sample.truth) out.truth->push_back((*sample.truth)[i]);
            if (sample.labels) out.labels->push_back((*sample.labels)[i]);
        }
    }
    return out;
}

std::string format_double(double value)
{
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    std::string text = buf;
    // keep reals distinguishable from integers when read back
    if (text.find_first_of(".e") == std::string::npos) text += ".0";
    return text;
}

namespace {

std::string cell_text(const Cell& cell)
{
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return {};
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                return format_double(v);
            } else {
                return v;
            }
        },
        cell);
}

// CSV cells carry no type tag: integers, then reals, then text.
Cell cell_from_text(const std::string& text)
{
    if (text.empty()) return std::monostate{};
    std::int64_t i = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), i);
    if (ec == std::errc() && ptr == text.data() + text.size()) return i;
    if (auto d = parse_double(text); d && trim(text) == text) return *d;
    return text;
}

nlohmann::ordered_json cell_json(const Cell& cell)
{
    return std::visit(
        [](const auto& v) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v)) return format_double(v);
                // parse the 6-digit rendering so JSON and CSV carry the same value
                return *parse_double(format_double(v));
            } else {
                return v;
            }
        },
        cell);
}

Cell cell_from_json(const nlohmann::ordered_json& j)
{
    if (j.is_null()) return std::monostate{};
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "-inf" || s == "nan") return *parse_double(s);
    return s;
}

}  // namespace

std::string to_csv(const Table& table)
{
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out.push_back(',');
        out += csv_escape(table.columns[c]);
    }
    out.push_back('\n');
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out.push_back(',');
            out += csv_escape(cell_text(row[c]));
        }
        out.push_back('\n');
    }
    return out;
}

Table table_from_csv(const std::string& text)
{
    const auto records = parse_csv(text);
    Table table;
    if (records.empty()) return table;
    table.columns = records.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.columns.size()) throw IoError("CSV row " + std::to_string(r) + " has wrong width");
        std::vector<Cell> row;
        row.reserve(records[r].size());
        for (const auto& f : records[r]) row.push_back(cell_from_text(f));
        table.rows.push_back(std::move(row));
    }
    return table;
}

// Tables with a "procedure" column are keyed by procedure name, each holding its
// rows in order: {"columns": [...], "procedures": {"SL": [{...}, ...], ...},
// "row_order": ["SL", ...]}, where row_order names the procedure of each table row.
// Others are {"columns": [...], "rows": [{...}, ...]}.
std::string to_json(const Table& table)
{
    nlohmann::ordered_json doc;
    doc["columns"] = table.columns;
    const auto proc_it = std::find(table.columns.begin(), table.columns.end(), "procedure");

    auto row_object = [&](const std::vector<Cell>& row) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t c = 0; c < table.columns.size(); ++c) obj[table.columns[c]] = cell_json(row[c]);
        return obj;
    };

    if (proc_it != table.columns.end()) {
        const auto pc = static_cast<std::size_t>(proc_it - table.columns.begin());
        nlohmann::ordered_json procs = nlohmann::ordered_json::object();
        std::vector<std::string> order;
        for (const auto& row : table.rows) {
            const std::string name = cell_text(row[pc]);
            if (!procs.contains(name)) procs[name] = nlohmann::ordered_json::array();
            procs[name].push_back(row_object(row));
            order.push_back(name);
        }
        doc["procedures"] = std::move(procs);
        doc["row_order"] = order;
    } else {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& row : table.rows) rows.push_back(row_object(row));
        doc["rows"] = std::move(rows);
    }
    return doc.dump(2) + "\n";
}

Table table_from_json(const std::string& text)
{
    const auto doc = nlohmann::ordered_json::parse(text);
    Table table;
    table.columns = doc.at("columns").get<std::vector<std::string>>();
    auto add_row = [&](const nlohmann::ordered_json& obj) {
        std::vector<Cell> row;
        row.reserve(table.columns.size());
        for (const auto& col : table.columns) row.push_back(obj.contains(col) ? cell_from_json(obj.at(col)) : Cell{});
        table.rows.push_back(std::move(row));
    };
    if (doc.contains("procedures") && doc.contains("row_order")) {
        const auto& procs = doc.at("procedures");
        std::map<std::string, std::size_t> next;
        for (const auto& name : doc.at("row_order")) {
            const auto key = name.get<std::string>();
            add_row(procs.at(key).at(next[key]++));
        }
    } else if (doc.contains("procedures")) {
        for (const auto& [name, rows] : doc.at("procedures").items()) {
            for (const auto& obj : rows) add_row(obj);
        }
    } else if (doc.contains("rows")) {
        for (const auto& obj : doc.at("rows")) add_row(obj);
    }
    return table;
}

void write_table(const Table& table, TableFormat format, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << (format == TableFormat::csv ? to_csv(table) : to_json(table));
    if (!out) throw IoError("write failed for " + path.string());
}

Table read_table(const std::filesystem::path& path, TableFormat format)
{
    const std::string text = read_file(path);
    return format == TableFormat::csv ? table_from_csv(text) : table_from_json(text);
}

Table rounded(const Table& table)
{
    Table out = table;
    for (auto& row : out.rows) {
        for (auto& cell : row) {
            if (auto* d = std::get_if<double>(&cell)) *d = *parse_double(format_double(*d));
        }
    }
    return out;
}

namespace {

Cell opt_cell(const std::optional<double>& v)
{
    return v ? Cell{*v} : Cell{};
}

Cell size_cell(std::size_t v)
{
    return static_cast<std::int64_t>(v);
}

void push_quartiles(std::vector<Cell>& row, const std::optional<Quartiles>& q)
{
    row.push_back(q ? Cell{q->q25} : Cell{});
    row.push_back(q ? Cell{q->median} : Cell{});
    row.push_back(q ? Cell{q->q75} : Cell{});
    row.push_back(q ? Cell{q->mean} : Cell{});
}

}  // namespace

Table metrics_to_table(const MetricsTable& metrics)
{
    Table table;
    table.columns = {"procedure", "family", "config", "m", "pi0", "rho", "q", "seed", "n_reps", "mean_r",
                     "bfdr", "bfdr_se", "fdr", "fdr_se", "power", "relative_power",
                     "pi0_hat_q25", "pi0_hat_median", "pi0_hat_q75", "pi0_hat_mean",
                     "true_lfdr_q25", "true_lfdr_median", "true_lfdr_q75", "true_lfdr_mean",
                     "est_lfdr_q25", "est_lfdr_median", "est_lfdr_q75", "est_lfdr_mean",
                     "est_lfdr_oracle_q25", "est_lfdr_oracle_median", "est_lfdr_oracle_q75", "est_lfdr_oracle_mean"};
    for (const auto& m : metrics) {
        std::vector<Cell> row;
        row.reserve(table.columns.size());
        row.push_back(m.procedure);
        row.push_back(to_string(m.family));
        row.push_back(to_string(m.sim.kind));
        row.push_back(size_cell(m.sim.m));
        row.push_back(m.sim.pi0);
        row.push_back(m.sim.rho);
        row.push_back(m.q);
        row.push_back(static_cast<std::int64_t>(m.sim.seed));
        row.push_back(size_cell(m.n_reps));
        row.push_back(m.mean_r);
        row.push_back(m.bfdr);
        row.push_back(m.bfdr_se);
        row.push_back(m.fdr);
        row.push_back(m.fdr_se);
        row.push_back(opt_cell(m.power));
        row.push_back(opt_cell(m.relative_power));
        push_quartiles(row, m.pi0);
        push_quartiles(row, m.true_lfdr);
        push_quartiles(row, m.est_lfdr);
        push_quartiles(row, m.est_lfdr_oracle);
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::int64_t rejection_percentage(std::size_t r, std::size_t m)
{
    if (m == 0) return 0;
    return std::llround(100.0 * static_cast<double>(r) / static_cast<double>(m));
}

Table rejections_to_table(const std::vector<RejectionSummary>& rows)
{
    Table table;
    table.columns = {"procedure", "family", "q", "level", "r", "m", "percent", "threshold", "boundary_label",
                     "pi0_hat", "est_lfdr_at_threshold", "sellke_alpha", "sellke_alpha_pi0"};
    for (const auto& s : rows) {
        std::vector<Cell> row;
        row.push_back(s.procedure);
        row.push_back(s.family);
        row.push_back(s.q);
        row.push_back(s.level);
        row.push_back(size_cell(s.r));
        row.push_back(size_cell(s.m));
        row.push_back(rejection_percentage(s.r, s.m));
        row.push_back(s.r > 0 ? Cell{s.threshold} : Cell{});
        row.push_back(s.boundary_label ? Cell{*s.boundary_label} : Cell{});
        row.push_back(s.pi0_used);
        row.push_back(opt_cell(s.est_lfdr_at_threshold));
        row.push_back(opt_cell(s.sellke_alpha_at_threshold));
        row.push_back(opt_cell(s.sellke_alpha_pi0_at_threshold));
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace bfdr
