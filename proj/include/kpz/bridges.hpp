#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/normal_distribution.hpp>

#include "kpz/common.hpp"
#include "kpz/random.hpp"
#include "kpz/statistics.hpp"

namespace kpz {

/// H_T(x) = e^{T^{1/3} x}; H_T(-inf) = 0.
inline double hamiltonian(double x, double T)
{
    if (x == kNegInf) return 0.0;
    return std::exp(cube_root(T) * x);
}

inline double log_hamiltonian(double x, double T) { return x == kNegInf ? kNegInf : cube_root(T) * x; }

/// Brownian bridge on [a, b] from x to y, sampled on a uniform grid of spacing <= step.
struct BridgeSpec {
    double a = 0.0, b = 1.0;
    double x = 0.0, y = 0.0;
    double step = 1.0 / 64.0;

    void validate() const
    {
        if (!(a < b)) throw DomainError("BridgeSpec: need a < b");
        if (!(step > 0.0)) throw DomainError("BridgeSpec: step must be positive");
    }
    std::size_t intervals() const { return static_cast<std::size_t>(std::ceil((b - a) / step - 1e-9)); }
    std::vector<double> grid() const { return linspace(a, b, intervals() + 1); }
};

/// Draws a bridge path on spec.grid() from standard Brownian increments.
inline std::vector<double> sample_bridge(const BridgeSpec& spec, Engine& eng)
{
    spec.validate();
    const std::size_t n = spec.intervals();
    const double L = spec.b - spec.a, h = L / static_cast<double>(n), sh = std::sqrt(h);
    boost::random::normal_distribution<double> normal;
    std::vector<double> w(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) w[i] = w[i - 1] + sh * normal(eng);
    const double end = w[n];
    for (std::size_t i = 0; i <= n; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n);
        w[i] = spec.x + w[i] + frac * (spec.y - spec.x - end);
    }
    w[n] = spec.y;
    return w;
}

struct BridgeMinTail {
    double exact = 1.0;  // P(min < min(x, y) - s) = e^{-2(x-m)(y-m)/L}, m = min(x,y) - s
    double bound = 1.0;  // e^{-2 s^2 / L}
};

inline BridgeMinTail bridge_min_tail(double x, double y, double L, double s)
{
    if (s < 0.0) throw DomainError("bridge_min_tail: s must be non-negative");
    if (!(L > 0.0)) throw DomainError("bridge_min_tail: L must be positive");
    const double m = std::min(x, y) - s;
    return {std::exp(-2.0 * (x - m) * (y - m) / L), std::exp(-2.0 * s * s / L)};
}

/// Monte Carlo estimate of P(min of the bridge < min(x,y) - s) from `steps`-point discrete monitoring,
/// with the level raised by 0.5826 sqrt(h) to correct for crossings between grid points.
inline stats::MeanEstimate bridge_min_tail_mc(double x, double y, double L, double s, std::size_t n,
                                              std::uint64_t seed, std::size_t steps = 1024)
{
    if (n == 0 || steps == 0) throw DomainError("bridge_min_tail_mc: n and steps must be positive");
    constexpr double kShift = 0.5826;
    const double h = L / static_cast<double>(steps), sh = std::sqrt(h);
    const double level = std::min(x, y) - s + kShift * sh;
    Engine eng = replica_engine(seed, 0, 7);
    boost::random::normal_distribution<double> normal;
    std::vector<double> w(steps + 1);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < n; ++r) {
        w[0] = 0.0;
        for (std::size_t i = 1; i <= steps; ++i) w[i] = w[i - 1] + sh * normal(eng);
        const double end = w[steps];
        bool hit = false;
        for (std::size_t i = 1; i < steps && !hit; ++i) {
            const double frac = static_cast<double>(i) / static_cast<double>(steps);
            hit = x + w[i] + frac * (y - x - end) < level;
        }
        hits += hit;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n};
}

/// (1/sqrt 3) e^{-8(1-xi) sqrt(c) s^{3/2} / (3 sqrt 3)}: bound on P(exists t: B(t) >= s + c t^2).
inline double bm_parabola_crossing_bound(double s, double c, double xi)
{
    if (!(xi > 0.0 && xi < 1.0)) throw DomainError("bm_parabola_crossing_bound: xi must lie in (0,1)");
    if (!(c > 0.0) || s < 0.0) throw DomainError("bm_parabola_crossing_bound: need c > 0, s >= 0");
    return std::exp(-8.0 * (1.0 - xi) * std::sqrt(c) * s * std::sqrt(s) / (3.0 * std::sqrt(3.0))) / std::sqrt(3.0);
}

/// Monte Carlo estimate of P(exists |t| <= window: B(t) >= s + c t^2) for two-sided BM with B(0) = 0,
/// discretely monitored with the barrier lowered by 0.5826 sqrt(h).
inline stats::MeanEstimate bm_parabola_crossing_mc(double s, double c, double window, std::size_t n,
                                                   std::uint64_t seed, std::size_t steps_per_side = 1024)
{
    const double h = window / static_cast<double>(steps_per_side), sh = std::sqrt(h);
    const double shift = 0.5826 * sh;
    Engine eng = replica_engine(seed, 0, 11);
    boost::random::normal_distribution<double> normal;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < n; ++r) {
        bool hit = false;
        for (int side = 0; side < 2; ++side) {
            double b = 0.0;
            for (std::size_t i = 1; i <= steps_per_side; ++i) {
                b += sh * normal(eng);
                const double t = h * static_cast<double>(i);
                if (b >= s + c * t * t - shift) hit = true;
            }
        }
        hits += hit;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n};
}

/// P(2|X1| + 2|X2| >= m) with X1, X2 iid N(0, sigma2 * w).
inline double reflection_two_sided_min_bound(double m, double w, double sigma2)
{
    if (!(w > 0.0) || !(sigma2 > 0.0)) throw DomainError("reflection_two_sided_min_bound: w and sigma2 must be positive");
    if (m <= 0.0) return 1.0;
    const double tau = std::sqrt(sigma2 * w), c = m / 2.0;
    const boost::math::normal_distribution<double> unit;
    // P(|X1| + |X2| < c) = int_0^c f_{|X|}(u) F_{|X|}(c - u) du
    auto f = [&](double u) {
        return 2.0 * boost::math::pdf(unit, u / tau) / tau * (2.0 * boost::math::cdf(unit, (c - u) / tau) - 1.0);
    };
    const double inside = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, c, 15, 1e-13);
    return std::clamp(1.0 - inside, 0.0, 1.0);
}

/// Single-curve Gibbs specification: top curve on [a, b] with upper neighbour +inf and lower curve g
/// given on the bridge grid (-inf entries allowed; an empty vector means g = -inf).
struct GibbsSpec {
    BridgeSpec bridge;
    double T = 1.0;
    std::vector<double> g;

    void validate() const
    {
        bridge.validate();
        if (!(T > 0.0)) throw DomainError("GibbsSpec: T must be positive");
        if (!g.empty() && g.size() != bridge.intervals() + 1) throw DomainError("GibbsSpec: g must live on the bridge grid");
    }

    static std::vector<double> line(const BridgeSpec& b, double g_a, double g_b)
    {
        auto grid = b.grid();
        for (double& u : grid) u = g_a + (u - b.a) / (b.b - b.a) * (g_b - g_a);
        return grid;
    }
};

/// W = exp(-int_a^b H_T(g(u) - L(u)) du), trapezoid rule on the path grid.
inline double gibbs_weight(const GibbsSpec& spec, const std::vector<double>& path)
{
    if (spec.g.empty()) return 1.0;
    const double h = (spec.bridge.b - spec.bridge.a) / static_cast<double>(path.size() - 1);
    double integral = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const double v = hamiltonian(spec.g[i] - path[i], spec.T);
        integral += (i == 0 || i + 1 == path.size()) ? 0.5 * v : v;
    }
    return std::exp(-integral * h);
}

struct GibbsStats {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    double acceptance_rate() const { return proposals ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0; }
};

class BoundaryTooConstraining : public NumericalFault {
public:
    using NumericalFault::NumericalFault;
};

struct GibbsSample {
    std::vector<std::vector<double>> paths;  // empty unless kept
    std::vector<double> midpoints;
    GibbsStats stats;
};

/// Rejection sampler for the H_T-Gibbs law: propose free bridges, accept with probability W.
/// Draws `n` accepted paths; throws if the acceptance rate falls below `min_rate` after
/// `check_after` proposals.
inline GibbsSample gibbs_resample(const GibbsSpec& spec, std::size_t n, std::uint64_t seed, bool keep_paths = false,
                                  double min_rate = 1e-4, std::size_t check_after = 1000000)
{
    spec.validate();
    Engine eng = replica_engine(seed, 0, 3);
    GibbsSample out;
    const std::size_t mid = spec.bridge.intervals() / 2;
    while (out.stats.accepted < n) {
        auto path = sample_bridge(spec.bridge, eng);
        ++out.stats.proposals;
        const double w = gibbs_weight(spec, path);
        if (w >= 1.0 || uniform01(eng) < w) {
            ++out.stats.accepted;
            out.midpoints.push_back(path[mid]);
            if (keep_paths) out.paths.push_back(std::move(path));
        }
        if (out.stats.proposals >= check_after && out.stats.acceptance_rate() < min_rate)
            throw BoundaryTooConstraining("gibbs_resample: acceptance rate " + std::to_string(out.stats.acceptance_rate()) +
                                          " after " + std::to_string(out.stats.proposals) + " proposals");
    }
    return out;
}

struct DominanceReport {
    double worst_z = kNegInf;   // max over t of (F_A(t) - F_B(t)) / SE
    double worst_t = 0.0;
    bool dominated = true;      // F_B >= F_A - k SE on the whole grid
    GibbsStats stats_a, stats_b;
};

/// Compares midpoint CDFs: B (lower boundary data) should be stochastically below A.
inline DominanceReport dominance_from_samples(std::vector<double> a, std::vector<double> b, double k_se = 3.0,
                                              std::size_t grid_points = 99)
{
    if (a.empty() || b.empty()) throw DomainError("dominance_test: empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    DominanceReport rep;
    for (std::size_t g = 1; g <= grid_points; ++g) {
        const double t = stats::quantile(pooled, static_cast<double>(g) / static_cast<double>(grid_points + 1));
        const double fa = stats::ecdf(a, t), fb = stats::ecdf(b, t);
        const double se = std::sqrt(fa * (1.0 - fa) / static_cast<double>(a.size()) + fb * (1.0 - fb) / static_cast<double>(b.size()));
        const double z = se > 0.0 ? (fa - fb) / se : (fa > fb ? kPosInf : 0.0);
        if (z > rep.worst_z) {
            rep.worst_z = z;
            rep.worst_t = t;
        }
    }
    rep.dominated = rep.worst_z <= k_se;
    return rep;
}

inline DominanceReport dominance_test(const GibbsSpec& a, const GibbsSpec& b, std::size_t n, std::uint64_t seed, double k_se = 3.0)
{
    a.validate();
    b.validate();
    if (a.bridge.a != b.bridge.a || a.bridge.b != b.bridge.b || a.T != b.T || a.bridge.intervals() != b.bridge.intervals())
        throw DomainError("dominance_test: specs must share interval, grid and T");
    if (b.bridge.x > a.bridge.x || b.bridge.y > a.bridge.y) throw DomainError("dominance_test: B endpoints must lie below A");
    if (!b.g.empty()) {
        if (a.g.empty()) throw DomainError("dominance_test: B lower curve must lie below A");
        for (std::size_t i = 0; i < a.g.size(); ++i) {
            if (b.g[i] > a.g[i]) throw DomainError("dominance_test: B lower curve must lie below A");
        }
    }
    auto sa = gibbs_resample(a, n, seed);
    auto sb = gibbs_resample(b, n, seed + 0x9e3779b97f4a7c15ULL);
    auto rep = dominance_from_samples(std::move(sa.midpoints), std::move(sb.midpoints), k_se);
    rep.stats_a = sa.stats;
    rep.stats_b = sb.stats;
    return rep;
}

}  // namespace kpz
