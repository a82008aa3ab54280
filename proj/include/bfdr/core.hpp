#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bfdr {

// Thrown for malformed inputs: p-values outside [0,1], bad levels, size mismatches.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Thrown for procedure/roster combinations that have no meaning.
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Thrown by numerical routines whose hypotheses fail (no root, boundary minimizer).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// p-values with optional ground truth (truth[i] == true means H_i is a true null)
// and optional identifiers. Indices are 0-based throughout the library.
struct PValueSample {
    std::vector<double> values;
    std::optional<std::vector<bool>> truth;
    std::optional<std::vector<std::string>> labels;

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }
    std::size_t null_count() const;
};

// Throws ValidationError naming the first offending index.
void validate(const PValueSample& sample);

// Order statistics p_(1) <= ... <= p_(m); ranks are 1-based with p_(0) := 0.
class OrderedSample {
public:
    OrderedSample() = default;
    OrderedSample(std::vector<double> sorted, std::vector<std::size_t> permutation);

    std::size_t size() const noexcept { return sorted_.size(); }
    bool empty() const noexcept { return sorted_.empty(); }

    // p_(k) for k in 0..m
    double at_rank(std::size_t k) const noexcept { return k == 0 ? 0.0 : sorted_[k - 1]; }
    // original index of the hypothesis at rank k in 1..m
    std::size_t index_at_rank(std::size_t k) const noexcept { return permutation_[k - 1]; }

    const std::vector<double>& sorted_values() const noexcept { return sorted_; }
    const std::vector<std::size_t>& permutation() const noexcept { return permutation_; }

private:
    std::vector<double> sorted_;
    std::vector<std::size_t> permutation_;
};

// Stable sort: equal p-values keep ascending original index order.
OrderedSample order_sample(const PValueSample& sample);

struct StageTrace {
    std::optional<std::size_t> r1;
    std::optional<double> adjusted_level;
    std::optional<double> pi0_used;
};

struct RejectionOutcome {
    std::size_t r = 0;
    double threshold = 0.0;
    std::optional<std::size_t> boundary_index;
    std::vector<std::size_t> rejected;  // original indices, in rank order
    StageTrace stage_trace;
};

RejectionOutcome outcome_from_rank(const OrderedSample& ordered, std::size_t r);

enum class Family { SL, BH };

enum class Adjustment { none, two_stage, storey_fixed, storey_adaptive, lsl, oracle };

enum class DomainCap { cap_at_q, uncapped };

struct ProcedureSpec {
    std::string name;
    Family family = Family::SL;
    Adjustment adjustment = Adjustment::none;
    double q = 0.1;

    std::optional<double> lambda;       // storey_fixed
    std::optional<double> delta;        // storey_adaptive grid step
    std::optional<double> grid_start;   // storey_adaptive; defaults to q
    bool reduced_level = false;         // two_stage at q/(1+q)
    DomainCap domain_cap = DomainCap::cap_at_q;
    std::optional<double> oracle_pi0;   // oracle; filled from the simulator when absent
};

void validate(const ProcedureSpec& spec);

std::string to_string(Family family);
std::string to_string(Adjustment adjustment);

}  // namespace bfdr
