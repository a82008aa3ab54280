#include "bfdr/pi0.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bfdr {

namespace {

void require_nonempty(const PValueSample& sample)
{
    if (sample.empty()) throw ValidationError("null-proportion estimation needs at least one p-value");
    validate(sample);
}

double storey_value(const std::vector<double>& values, double lambda)
{
    const auto exceed = std::count_if(values.begin(), values.end(), [lambda](double p) { return p > lambda; });
    const double m = static_cast<double>(values.size());
    return (1.0 + static_cast<double>(exceed)) / (m * (1.0 - lambda));
}

// Snap to 12 decimals so grids like 0.2 + 3 * 0.1 land on the intended double.
double snap(double x)
{
    return std::round(x * 1e12) / 1e12;
}

}  // namespace

std::string to_string(Pi0Method method)
{
    switch (method) {
    case Pi0Method::storey_fixed: return "storey_fixed";
    case Pi0Method::storey_adaptive: return "storey_adaptive";
    case Pi0Method::lsl: return "lsl";
    case Pi0Method::two_stage: return "two_stage";
    case Pi0Method::oracle: return "oracle";
    }
    return "unknown";
}

Pi0Estimate storey_pi0(const PValueSample& sample, double lambda)
{
    require_nonempty(sample);
    if (!(lambda >= 0.0 && lambda < 1.0)) {
        throw ValidationError("Storey lambda must lie in [0,1), got " + std::to_string(lambda));
    }
    Pi0Estimate est;
    est.method = Pi0Method::storey_fixed;
    est.lambda_hat = lambda;
    est.value = storey_value(sample.values, lambda);
    return est;
}

std::vector<double> storey_grid(double delta, double start)
{
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("grid step delta must lie in (0,1)");
    if (!(start > 0.0 && start < 1.0)) throw ValidationError("grid start must lie in (0,1)");
    std::vector<double> grid;
    for (std::size_t j = 0;; ++j) {
        const double lambda = snap(start + static_cast<double>(j) * delta);
        if (lambda >= 1.0) break;
        grid.push_back(lambda);
    }
    return grid;
}

Pi0Estimate adaptive_storey_pi0(const PValueSample& sample, double delta, double start)
{
    require_nonempty(sample);
    const auto grid = storey_grid(delta, start);

    Pi0Estimate est;
    est.method = Pi0Method::storey_adaptive;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double value = storey_value(sample.values, grid[j]);
        est.trace.emplace_back(grid[j], value);
        est.lambda_hat = grid[j];
        est.value = value;
        if (j > 0 && value >= est.trace[j - 1].second) break;
    }
    return est;
}

Pi0Estimate lsl_pi0(const PValueSample& sample)
{
    require_nonempty(sample);
    const OrderedSample ordered = order_sample(sample);
    const std::size_t m = ordered.size();
    const double md = static_cast<double>(m);

    auto slope = [&](std::size_t i) {
        return (1.0 - ordered.at_rank(i)) / static_cast<double>(m + 1 - i);
    };

    Pi0Estimate est;
    est.method = Pi0Method::lsl;
    est.trace.emplace_back(0.0, slope(0));

    std::size_t stop = m;
    for (std::size_t i = 1; i <= m; ++i) {
        const double s = slope(i);
        est.trace.emplace_back(static_cast<double>(i), s);
        if (s < est.trace[i - 1].second) {
            stop = i;
            break;
        }
    }

    // 1/S_i = (m + 1 - i) / (1 - p_(i)); the relative nudge absorbs rounding in 1 - p
    // so that an exact integer does not ceil to the next one.
    const double one_minus_p = 1.0 - ordered.at_rank(stop);
    double m0_hat = md;
    if (one_minus_p > 0.0) {
        const double inv = static_cast<double>(m + 1 - stop) / one_minus_p;
        m0_hat = std::min(std::ceil(inv * (1.0 - 1e-12)), md);
    }
    est.value = m0_hat / md;
    return est;
}

}  // namespace bfdr
