#pragma once

#include "bfdr/core.hpp"
#include "bfdr/procedures.hpp"
#include "bfdr/simgen.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bfdr {

// Outcome of one roster entry on one simulated sample.
struct ProcedureRecord {
    std::size_t r = 0;
    bool boundary_is_null = false;
    std::size_t false_rejections = 0;
    std::size_t true_rejections = 0;
    double pi0_used = 1.0;
    double threshold = 0.0;
    std::optional<double> true_lfdr_at_threshold;
    std::optional<double> est_lfdr_at_threshold;
    std::optional<double> est_lfdr_at_oracle;
};

struct ReplicationRecord {
    std::vector<ProcedureRecord> procedures;  // roster order
};

struct ExperimentOptions {
    std::size_t workers = 1;
    // Fit a Grenander density per replication and record lfdr quantities.
    bool lfdr = false;
};

struct Quartiles {
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double mean = 0.0;
};

// Quartiles by linear interpolation between order statistics (R type 7).
Quartiles quartiles(std::vector<double> values);

struct MetricsRow {
    std::string procedure;
    Family family = Family::SL;
    SimConfig sim;
    double q = 0.0;
    std::size_t n_reps = 0;
    double mean_r = 0.0;
    double bfdr = 0.0;
    double bfdr_se = 0.0;
    double fdr = 0.0;
    double fdr_se = 0.0;
    std::optional<double> power;
    std::optional<double> relative_power;
    Quartiles pi0;
    std::optional<Quartiles> true_lfdr;
    std::optional<Quartiles> est_lfdr;
    std::optional<Quartiles> est_lfdr_oracle;
};

using MetricsTable = std::vector<MetricsRow>;

// Runs every roster entry on n_reps samples. Results depend only on (sim, roster,
// n_reps, lfdr flag), never on the worker count.
std::vector<ReplicationRecord> simulate_records(const SimConfig& sim, std::span<const ProcedureSpec> roster,
                                                std::size_t n_reps, const ExperimentOptions& options = {});

MetricsTable aggregate(const SimConfig& sim, std::span<const ProcedureSpec> roster,
                       std::span<const ReplicationRecord> records);

MetricsTable run_experiment(const SimConfig& sim, std::span<const ProcedureSpec> roster, std::size_t n_reps,
                            const ExperimentOptions& options = {});

using RosterFactory = std::function<std::vector<ProcedureSpec>(double q)>;

// One experiment per q; rows ordered by (roster position, q).
MetricsTable bfdr_curve(const SimConfig& sim, const RosterFactory& roster, std::span<const double> q_grid,
                        std::size_t n_reps, const ExperimentOptions& options = {});

// One experiment per rho with the same seed; rows ordered by (roster position, rho).
MetricsTable corr_sweep(const SimConfig& sim, std::span<const double> rho_grid, std::span<const ProcedureSpec> roster,
                        std::size_t n_reps, const ExperimentOptions& options = {});

// Grid over (pi0, m); rows ordered by (roster position, pi0, m).
MetricsTable power_heatmap(const SimConfig& sim, std::span<const double> pi0_grid, std::span<const std::size_t> m_grid,
                           std::span<const ProcedureSpec> roster, std::size_t n_reps,
                           const ExperimentOptions& options = {});

struct MonteCarloEstimate {
    double estimate = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

// Fraction of draws p_m ~ U(0,1) for which p_m is the Support Line boundary
// hypothesis when appended to fixed_others. Equals q / m for q <= 1.
MonteCarloEstimate lemma_sl_key_check(std::span<const double> fixed_others, double q, std::size_t n_reps,
                                      std::uint64_t seed);

struct PToOneReport {
    std::size_t instances = 0;
    std::size_t applicable = 0;  // instances with p_m above the stage-1 threshold
    std::size_t violations = 0;
};

// Stage-1 rank with the last p-value replaced by 1.
std::size_t stage_one_rank_with_last_at_one(std::vector<double> values, double q);

// Randomized instances (m <= max_m, mixed configurations and levels): whenever
// p_m exceeds the stage-1 threshold, moving p_m to 1 must leave R1 unchanged.
PToOneReport lemma_p_to_one_check(std::size_t n_instances, std::uint64_t seed, std::size_t max_m = 64);

// q m0 / (m - R1(1)) on one sample whose last coordinate is a true null.
double expectation_bound_term(const PValueSample& sample, double q);

// Monte Carlo mean of expectation_bound_term; bounded by q / (1 - q).
MonteCarloEstimate expectation_bound_check(const SimConfig& sim, double q, std::size_t n_reps,
                                           const ExperimentOptions& options = {});

// Runs fn(i) for i in [0, n) over `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace bfdr
