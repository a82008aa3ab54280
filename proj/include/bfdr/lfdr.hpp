#pragma once

#include "bfdr/core.hpp"
#include "bfdr/pi0.hpp"

#include <span>
#include <vector>

namespace bfdr {

// Piecewise-constant non-increasing density on [0,1]. heights[j] applies on
// (knots[j], knots[j+1]]; the first interval also covers t = 0.
class MonotoneDensity {
public:
    MonotoneDensity(std::vector<double> knots, std::vector<double> heights);

    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<double>& heights() const noexcept { return heights_; }
    double total_mass() const noexcept;

private:
    std::vector<double> knots_;
    std::vector<double> heights_;
};

// Grenander estimator: left derivative of the least concave majorant of the
// empirical CDF, anchored at (0,0) and (1,1). Requires strictly positive p-values
// (a p-value of exactly 0 puts an atom at the origin that no finite height can carry).
MonotoneDensity grenander_fit(const PValueSample& sample);

double density_eval(const MonotoneDensity& density, double t);

// pi0 / f(t); +infinity where the fitted density is zero.
double lfdr_hat(const Pi0Estimate& pi0, const MonotoneDensity& density, double t);
double lfdr_hat(double pi0, const MonotoneDensity& density, double t);

enum class AltKind { alternating, all_at_5 };

std::string to_string(AltKind kind);
AltKind alt_kind_from_string(const std::string& name);

struct AltConfig {
    AltKind kind = AltKind::alternating;
    double pi0 = 0.75;
};

// Distinct non-null means of a configuration: {1.25, 2.5, 3.75, 5} or {5}.
std::span<const double> alternative_means(AltKind kind);

// Average non-null density of a one-sided p-value at t relative to the null:
// mean_j phi(z - mu_j) / phi(z) with z = Phi^{-1}(1 - t).
double alternative_density_ratio(AltKind kind, double t);

// pi0 / (pi0 + (1 - pi0) * ratio(t)), t in (0,1).
double true_lfdr(const AltConfig& config, double t);

// The t* in (0,1) with true_lfdr(t*) = q, to |lfdr(t*) - q| <= 1e-8.
double oracle_threshold(const AltConfig& config, double q);

// Calibration lower bound t log(1/t) / (e^{-1} + t log(1/t)), 0 < t < 1/e.
double sellke_alpha(double t);
// Same with prior odds (1 - pi0) / pi0 in place of 1.
double sellke_alpha_pi0(double t, double pi0_hat);

}  // namespace bfdr
