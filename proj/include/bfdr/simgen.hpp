#pragma once

#include "bfdr/core.hpp"
#include "bfdr/lfdr.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace bfdr {

struct SimConfig {
    std::size_t m = 64;
    double pi0 = 0.75;
    AltKind kind = AltKind::alternating;
    double rho = 0.0;
    std::uint64_t seed = 20240601;

    std::size_t null_count() const;      // round(pi0 * m)
    std::size_t nonnull_count() const;   // m - null_count()
    AltConfig alt() const { return AltConfig{kind, pi0}; }
};

// Throws ConfigurationError for m = 0, pi0 or rho outside [0,1], or an
// alternating configuration whose non-null count is not a multiple of 4.
void validate(const SimConfig& config);

// Non-null means first (cycling 5/4, 10/4, 15/4, 20/4 or all 5), then zeros.
std::vector<double> mean_vector(const SimConfig& config);

// Engine for one replication, seeded from (seed, replication) alone so that
// replications can be generated in any order on any thread.
std::mt19937_64 replication_engine(std::uint64_t seed, std::uint64_t replication);

// Standard normal variate by inversion of a 53-bit uniform; portable across
// standard libraries, unlike std::normal_distribution.
double standard_normal(std::mt19937_64& engine);

// Z_i = mu_i + sqrt(rho) W + sqrt(1 - rho) eps_i, p_i = 1 - Phi(Z_i).
PValueSample sample_pvalues(const SimConfig& config, std::uint64_t replication);
PValueSample sample_pvalues(const SimConfig& config, const std::vector<double>& means, std::uint64_t replication);

}  // namespace bfdr
