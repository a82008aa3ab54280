#include "bfdr/simgen.hpp"

#include "bfdr/normal.hpp"

#include <cmath>

namespace bfdr {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::size_t SimConfig::null_count() const
{
    return static_cast<std::size_t>(std::llround(pi0 * static_cast<double>(m)));
}

std::size_t SimConfig::nonnull_count() const
{
    return m - null_count();
}

void validate(const SimConfig& config)
{
    if (config.m == 0) throw ConfigurationError("simulation needs m >= 1");
    if (!(config.pi0 >= 0.0 && config.pi0 <= 1.0)) throw ConfigurationError("simulation pi0 must lie in [0,1]");
    if (!(config.rho >= 0.0 && config.rho <= 1.0)) throw ConfigurationError("equicorrelation rho must lie in [0,1]");
    if (config.kind == AltKind::alternating && config.nonnull_count() % 4 != 0) {
        throw ConfigurationError("alternating configuration needs the non-null count (" +
                                 std::to_string(config.nonnull_count()) + ") to be a multiple of 4");
    }
}

std::vector<double> mean_vector(const SimConfig& config)
{
    validate(config);
    const auto means = alternative_means(config.kind);
    const std::size_t m1 = config.nonnull_count();
    std::vector<double> mu(config.m, 0.0);
    for (std::size_t i = 0; i < m1; ++i) mu[i] = means[i % means.size()];
    return mu;
}

std::mt19937_64 replication_engine(std::uint64_t seed, std::uint64_t replication)
{
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(replication + 0x632be59bd9b4e019ULL)));
}

double standard_normal(std::mt19937_64& engine)
{
    // (k + 0.5) / 2^53 lies strictly inside (0,1)
    const double u = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
    return normal::quantile(u);
}

PValueSample sample_pvalues(const SimConfig& config, const std::vector<double>& means, std::uint64_t replication)
{
    auto engine = replication_engine(config.seed, replication);
    const double shared_scale = std::sqrt(config.rho);
    const double own_scale = std::sqrt(1.0 - config.rho);
    const double w = standard_normal(engine);

    PValueSample sample;
    sample.values.resize(config.m);
    sample.truth.emplace(config.m);
    for (std::size_t i = 0; i < config.m; ++i) {
        const double eps = standard_normal(engine);
        const double z = means[i] + shared_scale * w + own_scale * eps;
        sample.values[i] = normal::sf(z);
        (*sample.truth)[i] = means[i] == 0.0;
    }
    return sample;
}

PValueSample sample_pvalues(const SimConfig& config, std::uint64_t replication)
{
    return sample_pvalues(config, mean_vector(config), replication);
}

}  // namespace bfdr
