#pragma once

#include "bfdr/core.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace bfdr {

enum class Pi0Method { storey_fixed, storey_adaptive, lsl, two_stage, oracle };

std::string to_string(Pi0Method method);

struct Pi0Estimate {
    double value = 1.0;
    Pi0Method method = Pi0Method::oracle;
    std::optional<double> lambda_hat;
    // storey_adaptive: (lambda, estimate) per visited grid point.
    // lsl: (i, S_i) per scanned rank, starting at i = 0.
    std::vector<std::pair<double, double>> trace;
};

// (1 + #{p_i > lambda}) / (m (1 - lambda)); not capped at 1.
Pi0Estimate storey_pi0(const PValueSample& sample, double lambda);

// Walks lambda = start, start + delta, ... (points >= 1 are dropped) and stops at
// the first grid point whose estimate does not decrease; that point is lambda_hat.
Pi0Estimate adaptive_storey_pi0(const PValueSample& sample, double delta, double start);

// Lowest-slope estimator: slopes S_i = (1 - p_(i)) / (m + 1 - i), stop at the
// first strict decrease, m0_hat = min(ceil(1 / S_i), m). Falls back to i = m.
Pi0Estimate lsl_pi0(const PValueSample& sample);

// lambda grid used by adaptive_storey_pi0, exposed for tests and traces.
std::vector<double> storey_grid(double delta, double start);

}  // namespace bfdr
