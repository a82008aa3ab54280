#include "bfdr/dataio.hpp"
#include "bfdr/mc_engine.hpp"
#include "bfdr/procedures.hpp"
#include "bfdr/simgen.hpp"

#include "doctest.h"

#include <atomic>
#include <cmath>

using namespace bfdr;

TEST_CASE("parallel_for visits every index once")
{
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 7, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
        if (i == 5) throw std::runtime_error("boom");
    }));
}

TEST_CASE("quartiles use linear interpolation between order statistics")
{
    const auto q = quartiles({4.0, 1.0, 3.0, 2.0});
    CHECK(q.q25 == doctest::Approx(1.75));
    CHECK(q.median == doctest::Approx(2.5));
    CHECK(q.q75 == doctest::Approx(3.25));
    CHECK(q.mean == doctest::Approx(2.5));
    const auto one = quartiles({0.3});
    CHECK(one.q25 == 0.3);
    CHECK(one.q75 == 0.3);
}

TEST_CASE("results do not depend on the worker count")
{
    SimConfig sim;
    sim.rho = 0.2;
    const auto roster = default_roster(0.2);
    const auto a = metrics_to_table(run_experiment(sim, roster, 300, ExperimentOptions{1, true}));
    const auto b = metrics_to_table(run_experiment(sim, roster, 300, ExperimentOptions{5, true}));
    CHECK(a == b);
}

TEST_CASE("a single replication aggregates to its own record")
{
    SimConfig sim;
    const auto roster = default_roster(0.2);
    const auto records = simulate_records(sim, roster, 1);
    const auto table = aggregate(sim, roster, records);
    REQUIRE(table.size() == roster.size());
    for (std::size_t j = 0; j < roster.size(); ++j) {
        const auto& rec = records[0].procedures[j];
        const auto& row = table[j];
        CHECK(row.n_reps == 1);
        CHECK(row.mean_r == static_cast<double>(rec.r));
        CHECK(row.bfdr == (rec.boundary_is_null ? 1.0 : 0.0));
        CHECK(row.fdr == static_cast<double>(rec.false_rejections) / static_cast<double>(std::max<std::size_t>(rec.r, 1)));
        REQUIRE(row.power);
        CHECK(*row.power == static_cast<double>(rec.true_rejections) / 16.0);
        CHECK(row.pi0.median == rec.pi0_used);
    }
}

TEST_CASE("power is absent when every hypothesis is null")
{
    SimConfig sim;
    sim.pi0 = 1.0;
    const auto table = run_experiment(sim, default_roster(0.2), 20);
    for (const auto& row : table) CHECK_FALSE(row.power);
}

TEST_CASE("oracle at pi0 = 1 reproduces SL replication by replication")
{
    SimConfig sim;
    sim.pi0 = 1.0;
    auto oracle = roster_entry("Oracle", 0.2);
    oracle.oracle_pi0 = 1.0;
    const std::vector<ProcedureSpec> roster{roster_entry("SL", 0.2), oracle};
    for (const auto& rec : simulate_records(sim, roster, 500)) {
        REQUIRE(rec.procedures[0].r == rec.procedures[1].r);
    }
}

TEST_CASE("total ties make every procedure all-or-nothing")
{
    SimConfig sim;
    sim.pi0 = 1.0;
    sim.rho = 1.0;
    const auto roster = default_roster(0.2);
    for (const auto& rec : simulate_records(sim, roster, 200)) {
        for (const auto& p : rec.procedures) REQUIRE((p.r == 0 || p.r == sim.m));
    }
}

TEST_CASE("SL boundary FDR equals pi0 q under independence")
{
    SimConfig sim;
    const std::vector<ProcedureSpec> roster{roster_entry("SL", 0.2)};
    const auto row = run_experiment(sim, roster, 4000, ExperimentOptions{4, false}).at(0);
    CHECK(std::fabs(row.bfdr - 0.15) <= 3.0 * row.bfdr_se);
    CHECK(row.bfdr_se == doctest::Approx(std::sqrt(row.bfdr * (1 - row.bfdr) / 4000.0)));
}

TEST_CASE("curves are ordered by procedure then q")
{
    SimConfig sim;
    const std::vector<double> grid{0.1, 0.2};
    const auto t = bfdr_curve(sim, [](double q) { return std::vector<ProcedureSpec>{roster_entry("SL", q), roster_entry("LSL", q)}; },
                              grid, 10);
    REQUIRE(t.size() == 4);
    CHECK(t[0].procedure == t[1].procedure);
    CHECK(t[0].q == 0.1);
    CHECK(t[1].q == 0.2);
    CHECK(t[2].procedure != t[0].procedure);
}

TEST_CASE("SL-key lemma")
{
    const std::vector<double> none;
    const auto single = lemma_sl_key_check(none, 0.2, 20000, 9);
    CHECK(std::fabs(single.estimate - 0.2) <= 3.0 * single.se);

    const std::vector<double> zeros(7, 0.0);
    const auto z = lemma_sl_key_check(zeros, 0.2, 20000, 9);
    CHECK(z.estimate <= 0.2 / 8 + 3.0 * std::max(z.se, 1e-3));

    SimConfig sim;
    sim.m = 16;
    auto others = sample_pvalues(sim, 0).values;
    others.pop_back();
    const auto e = lemma_sl_key_check(others, 0.2, 100000, 1);
    CHECK(std::fabs(e.estimate - 0.2 / 16) <= 3.0 * e.se);
}

TEST_CASE("p-to-one lemma has no violations")
{
    const auto rep = lemma_p_to_one_check(5000, 3);
    CHECK(rep.instances == 5000);
    CHECK(rep.applicable > 0);
    CHECK(rep.violations == 0);
}

TEST_CASE("expectation-bound lemma")
{
    PValueSample ones{std::vector<double>(8, 1.0)};
    ones.truth = std::vector<bool>{false, false, true, true, true, true, true, true};
    CHECK(expectation_bound_term(ones, 0.2) == doctest::Approx(0.2 * 6.0 / 8.0));

    SimConfig all_alt;
    all_alt.m = 8;
    all_alt.pi0 = 0.0;
    CHECK(expectation_bound_check(all_alt, 0.2, 50).estimate == 0.0);

    SimConfig null;
    null.pi0 = 1.0;
    const auto est = expectation_bound_check(null, 0.2, 4000);
    CHECK(est.estimate <= 0.25 + 3.0 * est.se);
}
