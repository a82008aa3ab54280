#include "bfdr/mc_engine.hpp"

#include "bfdr/lfdr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

namespace bfdr {

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

Quartiles quartiles(std::vector<double> values)
{
    Quartiles out;
    if (values.empty()) return out;
    std::sort(values.begin(), values.end());
    auto at = [&](double prob) {
        const double h = (static_cast<double>(values.size()) - 1.0) * prob;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const double frac = h - static_cast<double>(lo);
        if (frac == 0.0 || lo + 1 >= values.size()) return values[lo];
        const double a = values[lo];
        const double b = values[lo + 1];
        if (std::isinf(b)) return b;
        return a + frac * (b - a);
    };
    out.q25 = at(0.25);
    out.median = at(0.5);
    out.q75 = at(0.75);
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    return out;
}

namespace {

struct ReplicationContext {
    const SimConfig& sim;
    std::vector<double> means;
    std::span<const ProcedureSpec> roster;
    double true_pi0;
    bool lfdr;
    std::vector<std::optional<double>> oracle_t;  // per roster entry
};

ReplicationRecord run_replication(const ReplicationContext& ctx, std::size_t rep)
{
    const PValueSample sample = sample_pvalues(ctx.sim, ctx.means, rep);
    const auto& truth = *sample.truth;

    std::optional<MonotoneDensity> density;
    if (ctx.lfdr) {
        try {
            density.emplace(grenander_fit(sample));
        } catch (const ValidationError&) {
            // a zero p-value leaves the fit undefined; lfdr fields stay empty
        }
    }
    const AltConfig alt{ctx.sim.kind, ctx.true_pi0};

    ReplicationRecord record;
    record.procedures.reserve(ctx.roster.size());
    for (std::size_t j = 0; j < ctx.roster.size(); ++j) {
        const ProcedureResult res = run_procedure(ctx.roster[j], sample, ctx.true_pi0);
        ProcedureRecord pr;
        pr.r = res.outcome.r;
        pr.threshold = res.outcome.threshold;
        pr.pi0_used = res.pi0_used;
        for (std::size_t idx : res.outcome.rejected) {
            if (truth[idx]) {
                ++pr.false_rejections;
            } else {
                ++pr.true_rejections;
            }
        }
        pr.boundary_is_null = res.outcome.boundary_index && truth[*res.outcome.boundary_index];

        if (ctx.lfdr) {
            if (pr.r > 0 && pr.threshold > 0.0 && pr.threshold < 1.0) {
                pr.true_lfdr_at_threshold = true_lfdr(alt, pr.threshold);
            }
            if (density) {
                if (pr.r > 0) pr.est_lfdr_at_threshold = lfdr_hat(pr.pi0_used, *density, pr.threshold);
                if (ctx.oracle_t[j]) pr.est_lfdr_at_oracle = lfdr_hat(pr.pi0_used, *density, *ctx.oracle_t[j]);
            }
        }
        record.procedures.push_back(pr);
    }
    return record;
}

}  // namespace

std::vector<ReplicationRecord> simulate_records(const SimConfig& sim, std::span<const ProcedureSpec> roster,
                                                std::size_t n_reps, const ExperimentOptions& options)
{
    if (n_reps == 0) throw ConfigurationError("experiment needs at least one replication");
    if (roster.empty()) throw ConfigurationError("experiment needs a non-empty roster");
    validate(sim);
    for (const auto& spec : roster) validate(spec);

    ReplicationContext ctx{sim, mean_vector(sim), roster,
                           static_cast<double>(sim.null_count()) / static_cast<double>(sim.m), options.lfdr, {}};
    ctx.oracle_t.resize(roster.size());
    if (options.lfdr && ctx.true_pi0 > 0.0 && ctx.true_pi0 < 1.0) {
        std::map<double, double> cache;
        for (std::size_t j = 0; j < roster.size(); ++j) {
            const double q = roster[j].q;
            auto it = cache.find(q);
            if (it == cache.end()) it = cache.emplace(q, oracle_threshold(AltConfig{sim.kind, ctx.true_pi0}, q)).first;
            ctx.oracle_t[j] = it->second;
        }
    }

    std::vector<ReplicationRecord> records(n_reps);
    parallel_for(n_reps, options.workers, [&](std::size_t rep) { records[rep] = run_replication(ctx, rep); });
    return records;
}

MetricsTable aggregate(const SimConfig& sim, std::span<const ProcedureSpec> roster,
                       std::span<const ReplicationRecord> records)
{
    const double n = static_cast<double>(records.size());
    const std::size_t m1 = sim.nonnull_count();
    MetricsTable table;
    table.reserve(roster.size());

    for (std::size_t j = 0; j < roster.size(); ++j) {
        MetricsRow row;
        row.procedure = roster[j].name;
        row.family = roster[j].family;
        row.sim = sim;
        row.q = roster[j].q;
        row.n_reps = records.size();

        double sum_r = 0.0, boundary_nulls = 0.0, sum_fdp = 0.0, sum_fdp2 = 0.0, sum_power = 0.0;
        std::vector<double> pi0s, true_lfdr, est_lfdr, est_oracle;
        pi0s.reserve(records.size());
        for (const auto& rec : records) {
            const ProcedureRecord& pr = rec.procedures[j];
            sum_r += static_cast<double>(pr.r);
            if (pr.boundary_is_null) boundary_nulls += 1.0;
            const double fdp = static_cast<double>(pr.false_rejections) / static_cast<double>(std::max<std::size_t>(pr.r, 1));
            sum_fdp += fdp;
            sum_fdp2 += fdp * fdp;
            if (m1 > 0) sum_power += static_cast<double>(pr.true_rejections) / static_cast<double>(m1);
            pi0s.push_back(pr.pi0_used);
            if (pr.true_lfdr_at_threshold) true_lfdr.push_back(*pr.true_lfdr_at_threshold);
            if (pr.est_lfdr_at_threshold) est_lfdr.push_back(*pr.est_lfdr_at_threshold);
            if (pr.est_lfdr_at_oracle) est_oracle.push_back(*pr.est_lfdr_at_oracle);
        }
        row.mean_r = sum_r / n;
        row.bfdr = boundary_nulls / n;
        row.bfdr_se = std::sqrt(row.bfdr * (1.0 - row.bfdr) / n);
        row.fdr = sum_fdp / n;
        const double var = std::max(0.0, sum_fdp2 / n - row.fdr * row.fdr);
        row.fdr_se = std::sqrt(var / n);
        if (m1 > 0) row.power = sum_power / n;
        row.pi0 = quartiles(std::move(pi0s));
        if (!true_lfdr.empty()) row.true_lfdr = quartiles(std::move(true_lfdr));
        if (!est_lfdr.empty()) row.est_lfdr = quartiles(std::move(est_lfdr));
        if (!est_oracle.empty()) row.est_lfdr_oracle = quartiles(std::move(est_oracle));
        table.push_back(std::move(row));
    }

    // Relative power against the oracle entry of the same family.
    for (auto& row : table) {
        for (std::size_t j = 0; j < roster.size(); ++j) {
            if (roster[j].adjustment == Adjustment::oracle && roster[j].family == row.family) {
                const auto& oracle_power = table[j].power;
                if (row.power && oracle_power && *oracle_power > 0.0) row.relative_power = *row.power / *oracle_power;
                break;
            }
        }
    }
    return table;
}

MetricsTable run_experiment(const SimConfig& sim, std::span<const ProcedureSpec> roster, std::size_t n_reps,
                            const ExperimentOptions& options)
{
    const auto records = simulate_records(sim, roster, n_reps, options);
    return aggregate(sim, roster, records);
}

namespace {

// Interleave per-grid-point tables into (roster position, grid order).
MetricsTable regroup(const std::vector<MetricsTable>& per_point)
{
    MetricsTable out;
    if (per_point.empty()) return out;
    const std::size_t roster_size = per_point.front().size();
    for (std::size_t j = 0; j < roster_size; ++j) {
        for (const auto& table : per_point) out.push_back(table.at(j));
    }
    return out;
}

}  // namespace

MetricsTable bfdr_curve(const SimConfig& sim, const RosterFactory& roster, std::span<const double> q_grid,
                        std::size_t n_reps, const ExperimentOptions& options)
{
    std::vector<MetricsTable> per_q;
    per_q.reserve(q_grid.size());
    for (double q : q_grid) {
        const auto specs = roster(q);
        per_q.push_back(run_experiment(sim, specs, n_reps, options));
    }
    return regroup(per_q);
}

MetricsTable corr_sweep(const SimConfig& sim, std::span<const double> rho_grid, std::span<const ProcedureSpec> roster,
                        std::size_t n_reps, const ExperimentOptions& options)
{
    std::vector<MetricsTable> per_rho;
    per_rho.reserve(rho_grid.size());
    for (double rho : rho_grid) {
        SimConfig point = sim;
        point.rho = rho;
        per_rho.push_back(run_experiment(point, roster, n_reps, options));
    }
    return regroup(per_rho);
}

MetricsTable power_heatmap(const SimConfig& sim, std::span<const double> pi0_grid, std::span<const std::size_t> m_grid,
                           std::span<const ProcedureSpec> roster, std::size_t n_reps, const ExperimentOptions& options)
{
    std::vector<MetricsTable> cells;
    for (double pi0 : pi0_grid) {
        for (std::size_t m : m_grid) {
            SimConfig point = sim;
            point.pi0 = pi0;
            point.m = m;
            cells.push_back(run_experiment(point, roster, n_reps, options));
        }
    }
    return regroup(cells);
}

MonteCarloEstimate lemma_sl_key_check(std::span<const double> fixed_others, double q, std::size_t n_reps,
                                      std::uint64_t seed)
{
    if (!(q > 0.0 && q <= 1.0)) throw ValidationError("lemma check needs q in (0,1]");
    if (n_reps == 0) throw ConfigurationError("lemma check needs at least one replication");
    PValueSample sample;
    sample.values.assign(fixed_others.begin(), fixed_others.end());
    sample.values.push_back(0.0);
    validate(sample);
    const std::size_t last = sample.values.size() - 1;
    const double slope = q / static_cast<double>(sample.values.size());

    std::size_t hits = 0;
    auto engine = replication_engine(seed, 0);
    for (std::size_t rep = 0; rep < n_reps; ++rep) {
        sample.values[last] = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
        const OrderedSample ordered = order_sample(sample);
        const std::size_t r = support_line_rank(ordered, slope);
        if (r > 0 && ordered.index_at_rank(r) == last) ++hits;
    }
    MonteCarloEstimate out;
    out.n = n_reps;
    out.estimate = static_cast<double>(hits) / static_cast<double>(n_reps);
    out.se = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(n_reps));
    return out;
}

std::size_t stage_one_rank_with_last_at_one(std::vector<double> values, double q)
{
    values.back() = 1.0;
    PValueSample sample{std::move(values), {}, {}};
    const OrderedSample ordered = order_sample(sample);
    return support_line_rank(ordered, q / static_cast<double>(ordered.size()));
}

PToOneReport lemma_p_to_one_check(std::size_t n_instances, std::uint64_t seed, std::size_t max_m)
{
    static constexpr std::size_t kSizes[] = {4, 8, 16, 32, 64};
    static constexpr double kPi0[] = {0.25, 0.5, 0.75, 1.0};
    static constexpr double kRho[] = {0.0, 0.0, 0.5};

    std::vector<std::size_t> sizes;
    for (std::size_t m : kSizes) {
        if (m <= max_m) sizes.push_back(m);
    }
    if (sizes.empty()) throw ConfigurationError("p-to-one check needs max_m >= 4");

    auto picker = replication_engine(seed, std::numeric_limits<std::uint64_t>::max());
    PToOneReport report;
    for (std::size_t inst = 0; inst < n_instances; ++inst) {
        SimConfig cfg;
        cfg.m = sizes[picker() % sizes.size()];
        cfg.pi0 = kPi0[picker() % 4];
        cfg.kind = (picker() % 2 == 0) ? AltKind::alternating : AltKind::all_at_5;
        cfg.rho = kRho[picker() % 3];
        cfg.seed = seed;
        if (cfg.kind == AltKind::alternating && cfg.nonnull_count() % 4 != 0) cfg.kind = AltKind::all_at_5;
        const double q = 0.05 + 0.9 * static_cast<double>(picker() >> 11) * 0x1.0p-53;

        const PValueSample sample = sample_pvalues(cfg, inst);
        const OrderedSample ordered = order_sample(sample);
        const std::size_t r1 = support_line_rank(ordered, q / static_cast<double>(cfg.m));
        ++report.instances;
        if (sample.values.back() > ordered.at_rank(r1)) {
            ++report.applicable;
            if (stage_one_rank_with_last_at_one(sample.values, q) != r1) ++report.violations;
        }
    }
    return report;
}

double expectation_bound_term(const PValueSample& sample, double q)
{
    if (sample.empty()) throw ValidationError("expectation bound needs a non-empty sample");
    if (!sample.truth) throw ValidationError("expectation bound needs null labels");
    const std::size_t m = sample.size();
    const std::size_t r1 = stage_one_rank_with_last_at_one(sample.values, q);
    return q * static_cast<double>(sample.null_count()) / static_cast<double>(m - r1);
}

MonteCarloEstimate expectation_bound_check(const SimConfig& sim, double q, std::size_t n_reps,
                                           const ExperimentOptions& options)
{
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("expectation bound needs q in (0,1)");
    if (n_reps == 0) throw ConfigurationError("expectation bound needs at least one replication");
    const auto means = mean_vector(sim);
    std::vector<double> terms(n_reps);
    parallel_for(n_reps, options.workers,
                 [&](std::size_t rep) { terms[rep] = expectation_bound_term(sample_pvalues(sim, means, rep), q); });

    double sum = 0.0, sum2 = 0.0;
    for (double t : terms) {
        sum += t;
        sum2 += t * t;
    }
    MonteCarloEstimate out;
    out.n = n_reps;
    out.estimate = sum / static_cast<double>(n_reps);
    const double var = std::max(0.0, sum2 / static_cast<double>(n_reps) - out.estimate * out.estimate);
    out.se = std::sqrt(var / static_cast<double>(n_reps));
    return out;
}

}  // namespace bfdr
