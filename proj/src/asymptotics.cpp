#include "bfdr/asymptotics.hpp"

#include "bfdr/normal.hpp"
#include "bfdr/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bfdr {

PopulationModel::PopulationModel(AltConfig config) : config_(config)
{
    if (!(config_.pi0 >= 0.0 && config_.pi0 <= 1.0)) throw ValidationError("population pi0 must lie in [0,1]");
}

double PopulationModel::cdf(double t) const
{
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("population cdf is defined on [0,1]");
    if (t == 0.0) return 0.0;
    if (t == 1.0) return 1.0;
    const double z = normal::upper_quantile(t);
    const auto means = alternative_means(config_.kind);
    double alt = 0.0;
    for (double mu : means) alt += normal::cdf(mu - z);
    alt /= static_cast<double>(means.size());
    return config_.pi0 * t + (1.0 - config_.pi0) * alt;
}

double PopulationModel::density(double t) const
{
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("population density is defined on [0,1]");
    if (config_.pi0 == 1.0) return 1.0;
    if (t == 0.0) return std::numeric_limits<double>::infinity();
    if (t == 1.0) return config_.pi0;
    return config_.pi0 + (1.0 - config_.pi0) * alternative_density_ratio(config_.kind, t);
}

CdfPoint avg_cdf(const PopulationModel& model, double t)
{
    return CdfPoint{model.cdf(t), model.density(t)};
}

namespace {

// The objective t - c F(t) has derivative 1 - c f(t); f decreases from f(0+) to
// f(1), so the minimizer is the root of f(t) = 1/c when one exists inside (0,1).
double stationary_point(const PopulationModel& model, double level)
{
    const double target = 1.0 / level;
    const double f_hi = model.density(1.0);
    if (f_hi >= target) throw DomainError("objective decreases on all of [0,1]; minimizer at t = 1");
    double lo = 0.0;
    double hi = 1.0;
    // f(0+) = +inf when any alternative is present; otherwise the density is flat.
    if (model.pi0() == 1.0) throw DomainError("objective increases on all of [0,1]; minimizer at t = 0");
    for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (model.density(mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double t = 0.5 * (lo + hi);
    if (t <= 0.0 || t >= 1.0) throw DomainError("stationary point collapsed onto the boundary");
    return t;
}

}  // namespace

PopulationThresholds population_thresholds(const PopulationModel& model, double q)
{
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("population thresholds need q in (0,1)");
    PopulationThresholds out;
    out.t1 = stationary_point(model, q);
    out.cdf_at_t1 = model.cdf(out.t1);
    if (out.cdf_at_t1 >= 1.0) throw DomainError("F(t1*) = 1; second stage undefined");
    out.t2 = stationary_point(model, q / (1.0 - out.cdf_at_t1));
    return out;
}

double limiting_boundary_fdr(const PopulationModel& model, double q)
{
    const auto th = population_thresholds(model, q);
    return q * model.pi0() / (1.0 - th.cdf_at_t1);
}

EmpiricalThresholds empirical_two_stage_thresholds(const PValueSample& sample, double q)
{
    if (sample.empty()) throw ValidationError("empirical thresholds need a non-empty sample");
    validate(sample);
    std::vector<double> sorted = sample.values;
    std::sort(sorted.begin(), sorted.end());
    const double m = static_cast<double>(sorted.size());
    auto ecdf = [&](double t) {
        return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin()) / m;
    };
    auto argmin = [&](double scale) {
        double best_t = 0.0;
        double best = 0.0;  // objective at t = 0
        for (double t : sorted) {
            const double value = t - scale * ecdf(t);
            if (value <= best) {
                best = value;
                best_t = t;
            }
        }
        return best_t;
    };

    EmpiricalThresholds out;
    out.tau1 = argmin(q);
    const double f1 = ecdf(out.tau1);
    out.tau2 = f1 >= 1.0 ? out.tau1 : argmin(q / (1.0 - f1));
    return out;
}

std::vector<ConvergenceRow> convergence_probe(const PopulationModel& model, double q, std::span<const std::size_t> m_list,
                                              std::size_t n_reps, std::uint64_t seed, double rho,
                                              const ExperimentOptions& options)
{
    if (n_reps == 0) throw ConfigurationError("convergence probe needs at least one replication");
    const auto th = population_thresholds(model, q);
    const double limit = q * model.pi0() / (1.0 - th.cdf_at_t1);

    std::vector<ConvergenceRow> rows;
    for (std::size_t m : m_list) {
        SimConfig sim;
        sim.m = m;
        sim.pi0 = model.pi0();
        sim.kind = model.config().kind;
        sim.rho = rho;
        sim.seed = seed;
        const auto means = mean_vector(sim);

        std::vector<double> gaps(n_reps), tau1_gaps(n_reps);
        parallel_for(n_reps, options.workers, [&](std::size_t rep) {
            const auto tau = empirical_two_stage_thresholds(sample_pvalues(sim, means, rep), q);
            double lfdr = 0.0;
            if (tau.tau2 >= 1.0) {
                lfdr = 1.0;
            } else if (tau.tau2 > 0.0) {
                lfdr = true_lfdr(model.config(), tau.tau2);
            }
            gaps[rep] = std::fabs(lfdr - limit);
            tau1_gaps[rep] = std::fabs(tau.tau1 - th.t1);
        });

        ConvergenceRow row;
        row.m = m;
        row.n_reps = n_reps;
        row.limit = limit;
        double sum = 0.0, sum2 = 0.0, sum_tau = 0.0;
        for (std::size_t i = 0; i < n_reps; ++i) {
            sum += gaps[i];
            sum2 += gaps[i] * gaps[i];
            sum_tau += tau1_gaps[i];
        }
        const double n = static_cast<double>(n_reps);
        row.mean_gap = sum / n;
        row.gap_se = std::sqrt(std::max(0.0, sum2 / n - row.mean_gap * row.mean_gap) / n);
        row.mean_tau1_gap = sum_tau / n;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace bfdr
