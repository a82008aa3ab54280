#include "bfdr/asymptotics.hpp"
#include "bfdr/procedures.hpp"
#include "bfdr/simgen.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace bfdr;

TEST_CASE("population mixture")
{
    const PopulationModel null_only(AltConfig{AltKind::alternating, 1.0});
    CHECK(null_only.cdf(0.3) == doctest::Approx(0.3));
    CHECK(null_only.density(0.3) == 1.0);

    const PopulationModel model(AltConfig{AltKind::alternating, 0.75});
    CHECK(model.density(0.05) == doctest::Approx(1.1686).epsilon(1e-4));
    CHECK(std::isinf(model.density(0.0)));
    CHECK(model.cdf(0.0) == 0.0);
    CHECK(model.cdf(1.0) == 1.0);
    // density is the derivative of the cdf
    for (double t : {0.001, 0.01, 0.1, 0.5}) {
        const double h = 1e-6 * t;
        CHECK(model.density(t) == doctest::Approx((model.cdf(t + h) - model.cdf(t - h)) / (2 * h)).epsilon(1e-6));
    }
    const auto point = avg_cdf(model, 0.05);
    CHECK(point.cdf == model.cdf(0.05));
    CHECK(point.density == model.density(0.05));
}

TEST_CASE("population thresholds")
{
    const PopulationModel model(AltConfig{AltKind::alternating, 0.75});
    const auto th = population_thresholds(model, 0.2);
    CHECK(std::fabs(model.density(th.t1) - 5.0) <= 1e-8 * 5.0);
    CHECK(std::fabs(model.density(th.t2) - (1.0 - th.cdf_at_t1) / 0.2) <= 1e-8 * 5.0);
    CHECK(th.t2 >= th.t1);

    CHECK_THROWS_AS(population_thresholds(PopulationModel(AltConfig{AltKind::alternating, 1.0}), 0.2), DomainError);
}

TEST_CASE("limit lies between q pi0 and q/(1-q)")
{
    for (auto kind : {AltKind::alternating, AltKind::all_at_5}) {
        for (double pi0 : {0.25, 0.5, 0.75}) {
            for (double q : {0.1, 0.2, 0.3}) {
                const PopulationModel model(AltConfig{kind, pi0});
                const double limit = limiting_boundary_fdr(model, q);
                CHECK(limit <= q / (1.0 - q));
                CHECK(limit >= q * pi0);
            }
        }
    }
    CHECK(limiting_boundary_fdr(PopulationModel(AltConfig{AltKind::alternating, 1e-9}), 0.2) < 1e-8);
}

TEST_CASE("empirical thresholds match SL and the TSSL second stage")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 1 + trial % 20;
        std::vector<double> p(m);
        for (auto& v : p) v = u(rng) < 0.5 ? 0.1 * u(rng) : u(rng);
        const PValueSample s{p};
        const double q = 0.1 + 0.1 * (trial % 3);
        const auto tau = empirical_two_stage_thresholds(s, q);
        REQUIRE(tau.tau1 == sl(s, q).threshold);
        const auto two = tssl(s, q);
        const std::size_t r1 = *two.stage_trace.r1;
        if (r1 > 0 && r1 < m) REQUIRE(tau.tau2 == two.threshold);
    }

    const auto ones = empirical_two_stage_thresholds(PValueSample{{1.0, 1.0, 1.0}}, 0.2);
    CHECK(ones.tau1 == 0.0);
    CHECK(ones.tau2 == 0.0);
}

TEST_CASE("convergence probe")
{
    const PopulationModel model(AltConfig{AltKind::alternating, 0.75});
    const std::vector<std::size_t> ms{64};
    const auto a = convergence_probe(model, 0.2, ms, 1, 5);
    const auto b = convergence_probe(model, 0.2, ms, 1, 5);
    REQUIRE(a.size() == 1);
    CHECK(a[0].mean_gap == b[0].mean_gap);
    CHECK(a[0].limit == doctest::Approx(limiting_boundary_fdr(model, 0.2)));

    CHECK_THROWS_AS(convergence_probe(PopulationModel(AltConfig{AltKind::alternating, 1.0}), 0.2, ms, 1, 5),
                    DomainError);
}
