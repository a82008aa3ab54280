#include "bfdr/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bfdr {

std::size_t PValueSample::null_count() const
{
    if (!truth) return 0;
    return static_cast<std::size_t>(std::count(truth->begin(), truth->end(), true));
}

void validate(const PValueSample& sample)
{
    for (std::size_t i = 0; i < sample.values.size(); ++i) {
        const double p = sample.values[i];
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ValidationError("p-value at index " + std::to_string(i) + " is " + std::to_string(p) +
                                  ", outside [0,1]");
        }
    }
    if (sample.truth && sample.truth->size() != sample.values.size()) {
        throw ValidationError("truth labels have length " + std::to_string(sample.truth->size()) +
                              " but sample has " + std::to_string(sample.values.size()) + " values");
    }
    if (sample.labels && sample.labels->size() != sample.values.size()) {
        throw ValidationError("identifier labels have length " + std::to_string(sample.labels->size()) +
                              " but sample has " + std::to_string(sample.values.size()) + " values");
    }
}

OrderedSample::OrderedSample(std::vector<double> sorted, std::vector<std::size_t> permutation)
    : sorted_(std::move(sorted)), permutation_(std::move(permutation))
{
    if (sorted_.size() != permutation_.size()) {
        throw ValidationError("ordered sample: values and permutation differ in length");
    }
}

OrderedSample order_sample(const PValueSample& sample)
{
    validate(sample);
    const auto& v = sample.values;
    std::vector<std::size_t> perm(v.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    std::vector<double> sorted(v.size());
    std::transform(perm.begin(), perm.end(), sorted.begin(), [&v](std::size_t i) { return v[i]; });
    return OrderedSample(std::move(sorted), std::move(perm));
}

RejectionOutcome outcome_from_rank(const OrderedSample& ordered, std::size_t r)
{
    if (r > ordered.size()) {
        throw ValidationError("rank " + std::to_string(r) + " exceeds sample size " +
                              std::to_string(ordered.size()));
    }
    RejectionOutcome out;
    out.r = r;
    out.threshold = ordered.at_rank(r);
    if (r > 0) out.boundary_index = ordered.index_at_rank(r);
    out.rejected.assign(ordered.permutation().begin(), ordered.permutation().begin() + static_cast<std::ptrdiff_t>(r));
    return out;
}

void validate(const ProcedureSpec& spec)
{
    if (!(spec.q > 0.0 && spec.q < 1.0)) {
        throw ValidationError("procedure level q must lie in (0,1), got " + std::to_string(spec.q));
    }
    if (spec.lambda && !(*spec.lambda >= 0.0 && *spec.lambda < 1.0)) {
        throw ValidationError("lambda must lie in [0,1), got " + std::to_string(*spec.lambda));
    }
    if (spec.delta && !(*spec.delta > 0.0 && *spec.delta < 1.0)) {
        throw ValidationError("delta must lie in (0,1), got " + std::to_string(*spec.delta));
    }
    if (spec.grid_start && !(*spec.grid_start > 0.0 && *spec.grid_start < 1.0)) {
        throw ValidationError("grid start must lie in (0,1), got " + std::to_string(*spec.grid_start));
    }
    if (spec.oracle_pi0 && !(*spec.oracle_pi0 > 0.0 && *spec.oracle_pi0 <= 1.0)) {
        throw ValidationError("oracle pi0 must lie in (0,1], got " + std::to_string(*spec.oracle_pi0));
    }
}

std::string to_string(Family family)
{
    return family == Family::SL ? "SL" : "BH";
}

std::string to_string(Adjustment adjustment)
{
    switch (adjustment) {
    case Adjustment::none: return "none";
    case Adjustment::two_stage: return "two_stage";
    case Adjustment::storey_fixed: return "storey_fixed";
    case Adjustment::storey_adaptive: return "storey_adaptive";
    case Adjustment::lsl: return "lsl";
    case Adjustment::oracle: return "oracle";
    }
    return "unknown";
}

}  // namespace bfdr
