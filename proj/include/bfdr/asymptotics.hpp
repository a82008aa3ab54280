#pragma once

#include "bfdr/core.hpp"
#include "bfdr/lfdr.hpp"
#include "bfdr/mc_engine.hpp"

#include <span>
#include <vector>

namespace bfdr {

// Large-m mixture of the Gaussian shift model: F(t) = pi0 t + (1 - pi0) mean_j Phi(mu_j - z_t),
// f(t) = pi0 + (1 - pi0) mean_j exp(mu_j z_t - mu_j^2 / 2), z_t = Phi^{-1}(1 - t).
class PopulationModel {
public:
    explicit PopulationModel(AltConfig config);

    const AltConfig& config() const noexcept { return config_; }
    double pi0() const noexcept { return config_.pi0; }

    double cdf(double t) const;
    double density(double t) const;  // +infinity at t = 0 when pi0 < 1

private:
    AltConfig config_;
};

struct CdfPoint {
    double cdf = 0.0;
    double density = 0.0;
};

CdfPoint avg_cdf(const PopulationModel& model, double t);

struct PopulationThresholds {
    double t1 = 0.0;
    double t2 = 0.0;
    double cdf_at_t1 = 0.0;
};

// Minimizers of t - q F(t) and t - q F(t) / (1 - F(t1)) over [0,1], located on the
// stationarity conditions f(t) = 1/q and f(t) = (1 - F(t1)) / q. Throws DomainError
// when a minimizer sits on the boundary.
PopulationThresholds population_thresholds(const PopulationModel& model, double q);

// q pi0 / (1 - F(t1)).
double limiting_boundary_fdr(const PopulationModel& model, double q);

struct EmpiricalThresholds {
    double tau1 = 0.0;
    double tau2 = 0.0;
};

// Empirical counterparts over the ECDF jump points {0} u {p_i}; ties go to the
// largest candidate. When F_m(tau1) = 1 the second stage is undefined and tau2 = tau1.
EmpiricalThresholds empirical_two_stage_thresholds(const PValueSample& sample, double q);

struct ConvergenceRow {
    std::size_t m = 0;
    std::size_t n_reps = 0;
    double limit = 0.0;
    double mean_gap = 0.0;
    double gap_se = 0.0;
    double mean_tau1_gap = 0.0;  // mean |tau1 - t1*|
};

// For each m, simulates samples and reports mean |lfdr(tau2) - limit|.
// lfdr(0) is taken as its limit 0 when tau2 = 0.
std::vector<ConvergenceRow> convergence_probe(const PopulationModel& model, double q, std::span<const std::size_t> m_list,
                                              std::size_t n_reps, std::uint64_t seed, double rho = 0.0,
                                              const ExperimentOptions& options = {});

}  // namespace bfdr
