#pragma once

#include "bfdr/core.hpp"
#include "bfdr/pi0.hpp"

#include <optional>
#include <vector>

namespace bfdr {

struct PluginPolicy {
    DomainCap domain_cap = DomainCap::cap_at_q;
    double pi0_floor = 1e-12;
};

// Rank maximizing slope * k - p_(k) over k = 0..m (largest k on ties). When
// cap is set only ranks with p_(k) <= cap compete, plus k = 0.
std::size_t support_line_rank(const OrderedSample& ordered, double slope, std::optional<double> cap = {});

// Largest k with p_(k) <= level * k / m, or 0.
std::size_t step_up_rank(const OrderedSample& ordered, double level);

// Support Line at level q.
RejectionOutcome sl(const PValueSample& sample, double q);
// Benjamini-Hochberg step-up at level q.
RejectionOutcome bh(const PValueSample& sample, double q);

// Two-stage Support Line. Pass level = q, or q / (1 + q) for the reduced-level variant.
RejectionOutcome tssl(const PValueSample& sample, double level);
// Two-stage BH step-up, the BH analogue of tssl.
RejectionOutcome tst(const PValueSample& sample, double level);

RejectionOutcome sl_plugin(const PValueSample& sample, double q, const Pi0Estimate& pi0,
                           const PluginPolicy& policy = {});
RejectionOutcome bh_plugin(const PValueSample& sample, double q, const Pi0Estimate& pi0,
                           const PluginPolicy& policy = {});

// Null-proportion estimate a procedure spec plugs in, before any floor.
// For two_stage this is (m - R1) / m; for none it is 1.
struct ProcedureResult {
    RejectionOutcome outcome;
    double pi0_used = 1.0;
};

// Dispatches a roster entry. true_pi0 is consulted by oracle entries that do not
// carry their own value.
ProcedureResult run_procedure(const ProcedureSpec& spec, const PValueSample& sample,
                              std::optional<double> true_pi0 = {});

// Roster of the ten simulation procedures at level q for the given family:
// TSSL(q), TSSL(q'), Storey(1/2), Storey(q), AS(0.1;q), AS(0.01;q), AS(0.1;0.5),
// LSL, SL, Oracle. BH family uses TST/BH names.
std::vector<ProcedureSpec> default_roster(double q, Family family = Family::SL);

// One entry of default_roster by its short name, e.g. "Storey(1/2)" or "TSSL(q')".
ProcedureSpec roster_entry(const std::string& name, double q, Family family = Family::SL);

}  // namespace bfdr
