#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "kpz/common.hpp"

namespace kpz::stats {

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;  // standard error of the mean
    std::size_t n = 0;
};

/// Sample mean and standard error (Welford accumulation).
inline MeanEstimate mean_se(std::span<const double> x)
{
    MeanEstimate r;
    double m = 0.0, m2 = 0.0;
    for (double v : x) {
        ++r.n;
        const double d = v - m;
        m += d / static_cast<double>(r.n);
        m2 += d * (v - m);
    }
    r.mean = m;
    if (r.n > 1) r.se = std::sqrt(m2 / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
    return r;
}

/// Kolmogorov limiting survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda)
{
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;  // series converges slowly; Q is 1 to double precision here
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value (Stephens' small-sample
/// correction to the effective size).
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult r;
    r.statistic = d;
    const double ne = std::sqrt(na * nb / (na + nb));
    r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
    return r;
}

/// Exact (Clopper-Pearson) two-sided interval for a binomial proportion at level 1 - alpha.
inline std::pair<double, double> clopper_pearson(std::size_t hits, std::size_t n, double alpha)
{
    if (n == 0) throw DomainError("clopper_pearson: n must be positive");
    if (hits > n) throw DomainError("clopper_pearson: hits exceed n");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("clopper_pearson: alpha must lie in (0,1)");
    const double k = static_cast<double>(hits), nn = static_cast<double>(n);
    const double lo = hits == 0 ? 0.0 : boost::math::ibeta_inv(k, nn - k + 1.0, alpha / 2.0);
    const double hi = hits == n ? 1.0 : boost::math::ibeta_inv(k + 1.0, nn - k, 1.0 - alpha / 2.0);
    return {lo, hi};
}

/// Empirical CDF of `sorted` at t (fraction of entries <= t).
inline double ecdf(std::span<const double> sorted, double t)
{
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

/// Sample quantile by linear interpolation between order statistics.
inline double quantile(std::vector<double> x, double p)
{
    if (x.empty()) throw DomainError("quantile: empty sample");
    std::sort(x.begin(), x.end());
    const double pos = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

}  // namespace kpz::stats
