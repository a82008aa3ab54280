#include "bfdr/normal.hpp"
#include "bfdr/simgen.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>

using namespace bfdr;

TEST_CASE("mean vectors place non-nulls first")
{
    SimConfig a;
    a.m = 8;
    a.pi0 = 0.5;
    CHECK(mean_vector(a) == std::vector<double>{1.25, 2.5, 3.75, 5.0, 0, 0, 0, 0});

    SimConfig b;
    b.m = 8;
    b.pi0 = 0.75;
    b.kind = AltKind::all_at_5;
    CHECK(mean_vector(b) == std::vector<double>{5, 5, 0, 0, 0, 0, 0, 0});

    SimConfig c;
    c.pi0 = 1.0;
    const auto zeros = mean_vector(c);
    CHECK(std::all_of(zeros.begin(), zeros.end(), [](double v) { return v == 0.0; }));

    SimConfig bad;
    bad.m = 10;
    bad.pi0 = 0.5;
    CHECK_THROWS_AS(mean_vector(bad), ConfigurationError);
}

TEST_CASE("null count rounds pi0 m")
{
    SimConfig s;
    s.m = 64;
    s.pi0 = 0.75;
    CHECK(s.null_count() == 48);
    CHECK(s.nonnull_count() == 16);
}

TEST_CASE("samples are deterministic in (seed, replication)")
{
    SimConfig s;
    s.rho = 0.3;
    const auto a = sample_pvalues(s, 12);
    const auto b = sample_pvalues(s, 12);
    CHECK(a.values == b.values);
    CHECK(a.truth == b.truth);
    CHECK(sample_pvalues(s, 13).values != a.values);
    s.seed += 1;
    CHECK(sample_pvalues(s, 12).values != a.values);
}

TEST_CASE("truth labels mark the null block")
{
    SimConfig s;
    const auto x = sample_pvalues(s, 0);
    REQUIRE(x.truth);
    CHECK(x.null_count() == 48);
    CHECK_FALSE((*x.truth)[0]);
    CHECK((*x.truth)[63]);
}

TEST_CASE("full correlation gives identical null p-values")
{
    SimConfig s;
    s.pi0 = 1.0;
    s.rho = 1.0;
    const auto x = sample_pvalues(s, 4);
    for (double v : x.values) CHECK(v == doctest::Approx(x.values[0]).epsilon(1e-14));
}

TEST_CASE("independent null p-values are uniform")
{
    SimConfig s;
    s.m = 1000;
    s.pi0 = 1.0;
    std::vector<double> all;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        const auto x = sample_pvalues(s, rep);
        all.insert(all.end(), x.values.begin(), x.values.end());
    }
    std::sort(all.begin(), all.end());
    const double n = static_cast<double>(all.size());
    double d = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        d = std::max({d, static_cast<double>(i + 1) / n - all[i], all[i] - static_cast<double>(i) / n});
    }
    // Kolmogorov-Smirnov critical value at level 1e-3
    CHECK(d < 1.9495 / std::sqrt(n));
}

TEST_CASE("equicorrelated statistics have correlation rho")
{
    for (double rho : {0.0, 0.5, 0.9}) {
        SimConfig s;
        s.m = 2;
        s.pi0 = 1.0;
        s.rho = rho;
        double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
        const int n = 20000;
        for (int rep = 0; rep < n; ++rep) {
            const auto x = sample_pvalues(s, static_cast<std::uint64_t>(rep));
            const double z1 = normal::upper_quantile(x.values[0]);
            const double z2 = normal::upper_quantile(x.values[1]);
            sx += z1;
            sy += z2;
            sxy += z1 * z2;
            sxx += z1 * z1;
            syy += z2 * z2;
        }
        const double cov = sxy / n - (sx / n) * (sy / n);
        const double r = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
        CHECK(std::fabs(r - rho) < 0.03);
    }
}

TEST_CASE("non-null p-values follow the shifted normal tail")
{
    SimConfig s;
    s.m = 4;
    s.pi0 = 0.0;
    int below = 0;
    const int n = 20000;
    for (int rep = 0; rep < n; ++rep) below += sample_pvalues(s, static_cast<std::uint64_t>(rep)).values[3] <= 0.05;
    // mean 5: P(p <= 0.05) = Phi(5 - 1.6449)
    const double expect = normal::cdf(5.0 - normal::upper_quantile(0.05));
    const double se = std::sqrt(expect * (1 - expect) / n);
    CHECK(std::fabs(below / static_cast<double>(n) - expect) <= 4 * se + 1e-4);
}
