#include "bfdr/procedures.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace bfdr {

namespace {

OrderedSample checked_order(const PValueSample& sample, double q)
{
    if (sample.empty()) throw ValidationError("procedures need at least one p-value");
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("level q must lie in (0,1), got " + std::to_string(q));
    return order_sample(sample);
}

double floored(const Pi0Estimate& pi0, const PluginPolicy& policy)
{
    if (!(pi0.value >= 0.0)) throw ValidationError("pi0 estimate must be non-negative");
    if (!(policy.pi0_floor > 0.0)) throw ValidationError("pi0 floor must be positive");
    return std::max(pi0.value, policy.pi0_floor);
}

// Shared two-stage skeleton; rank_at(level_scale) returns the stage rank when the
// per-rank slope is level / level_scale.
template <typename RankFn>
RejectionOutcome two_stage(const OrderedSample& ordered, double level, RankFn rank_at)
{
    const std::size_t m = ordered.size();
    const std::size_t r1 = rank_at(static_cast<double>(m));
    if (r1 == 0 || r1 == m) {
        RejectionOutcome out = outcome_from_rank(ordered, r1);
        out.stage_trace.r1 = r1;
        out.stage_trace.pi0_used = static_cast<double>(m - r1) / static_cast<double>(m);
        return out;
    }
    const double m0_hat = static_cast<double>(m - r1);
    RejectionOutcome out = outcome_from_rank(ordered, rank_at(m0_hat));
    out.stage_trace.r1 = r1;
    out.stage_trace.adjusted_level = level * static_cast<double>(m) / m0_hat;
    out.stage_trace.pi0_used = m0_hat / static_cast<double>(m);
    return out;
}

}  // namespace

std::size_t support_line_rank(const OrderedSample& ordered, double slope, std::optional<double> cap)
{
    std::size_t best = 0;
    double best_value = 0.0;
    for (std::size_t k = 1; k <= ordered.size(); ++k) {
        const double p = ordered.at_rank(k);
        if (cap && p > *cap) break;
        const double value = slope * static_cast<double>(k) - p;
        if (value >= best_value) {
            best_value = value;
            best = k;
        }
    }
    return best;
}

std::size_t step_up_rank(const OrderedSample& ordered, double level)
{
    const double m = static_cast<double>(ordered.size());
    for (std::size_t k = ordered.size(); k >= 1; --k) {
        if (ordered.at_rank(k) <= level * static_cast<double>(k) / m) return k;
    }
    return 0;
}

RejectionOutcome sl(const PValueSample& sample, double q)
{
    const OrderedSample ordered = checked_order(sample, q);
    return outcome_from_rank(ordered, support_line_rank(ordered, q / static_cast<double>(ordered.size())));
}

RejectionOutcome bh(const PValueSample& sample, double q)
{
    const OrderedSample ordered = checked_order(sample, q);
    return outcome_from_rank(ordered, step_up_rank(ordered, q));
}

RejectionOutcome tssl(const PValueSample& sample, double level)
{
    const OrderedSample ordered = checked_order(sample, level);
    return two_stage(ordered, level,
                     [&](double scale) { return support_line_rank(ordered, level / scale); });
}

RejectionOutcome tst(const PValueSample& sample, double level)
{
    const OrderedSample ordered = checked_order(sample, level);
    const double m = static_cast<double>(ordered.size());
    return two_stage(ordered, level,
                     [&](double scale) { return step_up_rank(ordered, level * m / scale); });
}

RejectionOutcome sl_plugin(const PValueSample& sample, double q, const Pi0Estimate& pi0,
                           const PluginPolicy& policy)
{
    const OrderedSample ordered = checked_order(sample, q);
    const double pi0_eff = floored(pi0, policy);
    const double slope = q / (pi0_eff * static_cast<double>(ordered.size()));
    const auto cap = policy.domain_cap == DomainCap::cap_at_q ? std::optional<double>(q) : std::nullopt;
    RejectionOutcome out = outcome_from_rank(ordered, support_line_rank(ordered, slope, cap));
    out.stage_trace.adjusted_level = q / pi0_eff;
    out.stage_trace.pi0_used = pi0.value;
    return out;
}

RejectionOutcome bh_plugin(const PValueSample& sample, double q, const Pi0Estimate& pi0,
                           const PluginPolicy& policy)
{
    const OrderedSample ordered = checked_order(sample, q);
    const double level = std::min(q / floored(pi0, policy), 1.0);
    RejectionOutcome out = outcome_from_rank(ordered, step_up_rank(ordered, level));
    out.stage_trace.adjusted_level = level;
    out.stage_trace.pi0_used = pi0.value;
    return out;
}

ProcedureResult run_procedure(const ProcedureSpec& spec, const PValueSample& sample, std::optional<double> true_pi0)
{
    validate(spec);
    const bool is_sl = spec.family == Family::SL;
    const double q = spec.q;
    const PluginPolicy policy{spec.domain_cap};

    auto plug = [&](const Pi0Estimate& est) {
        ProcedureResult res;
        res.outcome = is_sl ? sl_plugin(sample, q, est, policy) : bh_plugin(sample, q, est, policy);
        res.pi0_used = est.value;
        return res;
    };

    switch (spec.adjustment) {
    case Adjustment::none: {
        ProcedureResult res;
        res.outcome = is_sl ? sl(sample, q) : bh(sample, q);
        res.pi0_used = 1.0;
        return res;
    }
    case Adjustment::two_stage: {
        const double level = spec.reduced_level ? q / (1.0 + q) : q;
        ProcedureResult res;
        res.outcome = is_sl ? tssl(sample, level) : tst(sample, level);
        res.pi0_used = res.outcome.stage_trace.pi0_used.value_or(1.0);
        return res;
    }
    case Adjustment::storey_fixed:
        if (!spec.lambda) throw ConfigurationError(spec.name + ": storey_fixed needs lambda");
        return plug(storey_pi0(sample, *spec.lambda));
    case Adjustment::storey_adaptive:
        if (!spec.delta) throw ConfigurationError(spec.name + ": storey_adaptive needs delta");
        return plug(adaptive_storey_pi0(sample, *spec.delta, spec.grid_start.value_or(q)));
    case Adjustment::lsl:
        return plug(lsl_pi0(sample));
    case Adjustment::oracle: {
        const auto pi0 = spec.oracle_pi0 ? spec.oracle_pi0 : true_pi0;
        if (!pi0) throw ConfigurationError(spec.name + ": oracle needs the true pi0");
        if (!(*pi0 > 0.0)) throw ConfigurationError(spec.name + ": oracle level undefined when pi0 = 0");
        Pi0Estimate est;
        est.value = *pi0;
        est.method = Pi0Method::oracle;
        // The benchmark is plain SL (or BH) at level q / pi0, with no domain restriction.
        ProcedureResult res;
        res.outcome = is_sl ? sl_plugin(sample, q, est, PluginPolicy{DomainCap::uncapped})
                            : bh_plugin(sample, q, est);
        res.pi0_used = *pi0;
        return res;
    }
    }
    throw ConfigurationError("unknown adjustment for " + spec.name);
}

namespace {

constexpr std::array<const char*, 10> kRosterNames = {
    "TSSL(q)", "TSSL(q')", "Storey(1/2)", "Storey(q)", "AS(0.1;q)",
    "AS(0.01;q)", "AS(0.1;0.5)", "LSL", "SL", "Oracle"};

std::string family_name(const std::string& name, Family family)
{
    if (family == Family::SL) return name;
    if (name == "TSSL(q)") return "TST(q)";
    if (name == "TSSL(q')") return "TST(q')";
    if (name == "SL") return "BH";
    return name;
}

}  // namespace

ProcedureSpec roster_entry(const std::string& name, double q, Family family)
{
    // Accept either family's spelling.
    std::string key = name;
    if (key == "TST(q)") key = "TSSL(q)";
    if (key == "TST(q')") key = "TSSL(q')";
    if (key == "BH") key = "SL";

    ProcedureSpec spec;
    spec.family = family;
    spec.q = q;
    spec.name = family_name(key, family);
    if (key == "TSSL(q)") {
        spec.adjustment = Adjustment::two_stage;
    } else if (key == "TSSL(q')") {
        spec.adjustment = Adjustment::two_stage;
        spec.reduced_level = true;
    } else if (key == "Storey(1/2)") {
        spec.adjustment = Adjustment::storey_fixed;
        spec.lambda = 0.5;
    } else if (key == "Storey(q)") {
        spec.adjustment = Adjustment::storey_fixed;
        spec.lambda = q;
    } else if (key == "AS(0.1;q)") {
        spec.adjustment = Adjustment::storey_adaptive;
        spec.delta = 0.1;
    } else if (key == "AS(0.01;q)") {
        spec.adjustment = Adjustment::storey_adaptive;
        spec.delta = 0.01;
    } else if (key == "AS(0.1;0.5)") {
        spec.adjustment = Adjustment::storey_adaptive;
        spec.delta = 0.1;
        spec.grid_start = 0.5;
    } else if (key == "LSL") {
        spec.adjustment = Adjustment::lsl;
    } else if (key == "SL") {
        spec.adjustment = Adjustment::none;
    } else if (key == "Oracle") {
        spec.adjustment = Adjustment::oracle;
        spec.domain_cap = DomainCap::uncapped;
    } else {
        throw ConfigurationError("unknown roster procedure '" + name + "'");
    }
    validate(spec);
    return spec;
}

std::vector<ProcedureSpec> default_roster(double q, Family family)
{
    std::vector<ProcedureSpec> roster;
    roster.reserve(kRosterNames.size());
    for (const char* name : kRosterNames) roster.push_back(roster_entry(name, q, family));
    return roster;
}

}  // namespace bfdr
