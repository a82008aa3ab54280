#include "bfdr/lfdr.hpp"

#include "bfdr/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace bfdr {

MonotoneDensity::MonotoneDensity(std::vector<double> knots, std::vector<double> heights)
    : knots_(std::move(knots)), heights_(std::move(heights))
{
    if (knots_.size() < 2 || heights_.size() + 1 != knots_.size()) {
        throw ValidationError("monotone density needs n + 1 knots for n heights");
    }
    if (knots_.front() != 0.0 || knots_.back() != 1.0) {
        throw ValidationError("monotone density knots must span [0,1]");
    }
    for (std::size_t j = 0; j + 1 < knots_.size(); ++j) {
        if (!(knots_[j] < knots_[j + 1])) throw ValidationError("monotone density knots must increase");
    }
    for (std::size_t j = 0; j < heights_.size(); ++j) {
        if (heights_[j] < 0.0) throw ValidationError("monotone density heights must be non-negative");
        if (j > 0 && heights_[j] > heights_[j - 1]) {
            throw ValidationError("monotone density heights must be non-increasing");
        }
    }
}

double MonotoneDensity::total_mass() const noexcept
{
    double mass = 0.0;
    for (std::size_t j = 0; j < heights_.size(); ++j) mass += heights_[j] * (knots_[j + 1] - knots_[j]);
    return mass;
}

MonotoneDensity grenander_fit(const PValueSample& sample)
{
    if (sample.empty()) throw ValidationError("Grenander fit needs at least one p-value");
    const OrderedSample ordered = order_sample(sample);
    if (ordered.at_rank(1) <= 0.0) {
        throw ValidationError("Grenander fit needs strictly positive p-values");
    }
    const auto& x = ordered.sorted_values();
    const double m = static_cast<double>(x.size());

    // ECDF corner points (distinct x, F at the top of each jump), plus the anchors.
    std::vector<std::pair<double, double>> pts;
    pts.reserve(x.size() + 2);
    pts.emplace_back(0.0, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = static_cast<double>(i + 1) / m;
        if (pts.back().first == x[i]) {
            pts.back().second = f;
        } else {
            pts.emplace_back(x[i], f);
        }
    }
    if (pts.back().first < 1.0) pts.emplace_back(1.0, 1.0);

    // Upper hull by monotone chain; collinear middle points are dropped.
    std::vector<std::pair<double, double>> hull;
    for (const auto& p : pts) {
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            const double cross = (b.first - a.first) * (p.second - a.second) -
                                 (b.second - a.second) * (p.first - a.first);
            if (cross >= 0.0) {
                hull.pop_back();
            } else {
                break;
            }
        }
        hull.push_back(p);
    }

    std::vector<double> knots;
    std::vector<double> heights;
    knots.reserve(hull.size());
    for (std::size_t j = 0; j < hull.size(); ++j) {
        knots.push_back(hull[j].first);
        if (j + 1 < hull.size()) {
            const double h = (hull[j + 1].second - hull[j].second) / (hull[j + 1].first - hull[j].first);
            // Rounding can leave a later slope a hair above an earlier one.
            heights.push_back(heights.empty() ? h : std::min(h, heights.back()));
        }
    }
    return MonotoneDensity(std::move(knots), std::move(heights));
}

double density_eval(const MonotoneDensity& density, double t)
{
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("density evaluation point must lie in [0,1]");
    const auto& knots = density.knots();
    // first knot >= t, interval index is one before it (t = 0 maps to interval 0)
    auto it = std::lower_bound(knots.begin() + 1, knots.end(), t);
    const auto j = static_cast<std::size_t>(it - knots.begin()) - 1;
    return density.heights()[std::min(j, density.heights().size() - 1)];
}

double lfdr_hat(double pi0, const MonotoneDensity& density, double t)
{
    const double f = density_eval(density, t);
    if (f <= 0.0) return std::numeric_limits<double>::infinity();
    return pi0 / f;
}

double lfdr_hat(const Pi0Estimate& pi0, const MonotoneDensity& density, double t)
{
    return lfdr_hat(pi0.value, density, t);
}

std::string to_string(AltKind kind)
{
    return kind == AltKind::alternating ? "alternating" : "all_at_5";
}

AltKind alt_kind_from_string(const std::string& name)
{
    if (name == "alternating") return AltKind::alternating;
    if (name == "all_at_5" || name == "all-at-5") return AltKind::all_at_5;
    throw ConfigurationError("unknown mean configuration '" + name + "'");
}

std::span<const double> alternative_means(AltKind kind)
{
    static constexpr std::array<double, 4> alternating{1.25, 2.5, 3.75, 5.0};
    static constexpr std::array<double, 1> all_at_5{5.0};
    if (kind == AltKind::alternating) return alternating;
    return all_at_5;
}

double alternative_density_ratio(AltKind kind, double t)
{
    const double z = normal::upper_quantile(t);
    const auto means = alternative_means(kind);
    double sum = 0.0;
    // phi(z - mu) / phi(z) = exp(mu z - mu^2 / 2)
    for (double mu : means) sum += std::exp(mu * z - 0.5 * mu * mu);
    return sum / static_cast<double>(means.size());
}

double true_lfdr(const AltConfig& config, double t)
{
    if (!(t > 0.0 && t < 1.0)) throw ValidationError("true lfdr is defined for t in (0,1)");
    if (!(config.pi0 >= 0.0 && config.pi0 <= 1.0)) throw ValidationError("pi0 must lie in [0,1]");
    if (config.pi0 == 1.0) return 1.0;
    if (config.pi0 == 0.0) return 0.0;
    const double ratio = alternative_density_ratio(config.kind, t);
    if (std::isinf(ratio)) return 0.0;
    return config.pi0 / (config.pi0 + (1.0 - config.pi0) * ratio);
}

double oracle_threshold(const AltConfig& config, double q)
{
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("oracle threshold level must lie in (0,1)");
    if (!(config.pi0 > 0.0 && config.pi0 < 1.0)) {
        throw DomainError("true lfdr is constant when pi0 is 0 or 1; no threshold attains q");
    }
    // lfdr increases from 0 (t -> 0) to 1 (t -> 1) for positive alternative means.
    double lo = std::numeric_limits<double>::min();
    double hi = 1.0 - std::numeric_limits<double>::epsilon();
    if (true_lfdr(config, lo) >= q || true_lfdr(config, hi) <= q) {
        throw DomainError("no t in (0,1) with lfdr(t) = q");
    }
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 400; ++iter) {
        mid = 0.5 * (lo + hi);
        const double value = true_lfdr(config, mid);
        if (std::fabs(value - q) <= 1e-12) break;
        if (value < q) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= std::numeric_limits<double>::epsilon() * mid) break;
    }
    if (std::fabs(true_lfdr(config, mid) - q) > 1e-8) {
        throw DomainError("oracle threshold bisection did not reach tolerance");
    }
    return mid;
}

namespace {

void check_sellke_domain(double t)
{
    if (!(t > 0.0 && t < std::exp(-1.0))) {
        throw DomainError("calibration is defined for 0 < t < 1/e, got " + std::to_string(t));
    }
}

}  // namespace

double sellke_alpha(double t)
{
    check_sellke_domain(t);
    const double tl = -t * std::log(t);
    return tl / (std::exp(-1.0) + tl);
}

double sellke_alpha_pi0(double t, double pi0_hat)
{
    check_sellke_domain(t);
    if (!(pi0_hat > 0.0 && pi0_hat < 1.0)) {
        throw DomainError("calibration needs pi0 in (0,1), got " + std::to_string(pi0_hat));
    }
    const double tl = -t * std::log(t);
    return tl / (std::exp(-1.0) * (1.0 - pi0_hat) / pi0_hat + tl);
}

}  // namespace bfdr
