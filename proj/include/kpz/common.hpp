#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpz {

/// Precondition on an argument or grid was not met.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Solver or experiment configuration is unusable.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical invariant broke during a computation (e.g. a non-positive SHE value).
class NumericalFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

/// 2^{2/3}, the parabola denominator in y^2 / 2^{2/3}.
inline const double kTwoTwoThirds = std::cbrt(4.0);

inline double cube_root(double x) { return std::cbrt(x); }

/// log(sum_i exp(v_i)); -inf entries are skipped, an all -inf input yields -inf.
inline double log_sum_exp(std::span<const double> v)
{
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    if (m == kPosInf) return kPosInf;
    double acc = 0.0;
    for (double x : v) {
        if (x != kNegInf) acc += std::exp(x - m);
    }
    return m + std::log(acc);
}

/// Numerically stable log(1 + e^x).
inline double softplus(double x)
{
    if (x > 35.0) return x + std::exp(-x);
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

/// Evenly spaced grid of n points from lo to hi inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t n)
{
    if (n < 2) throw DomainError("linspace needs at least two points");
    std::vector<double> g(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + h * static_cast<double>(i);
    g.back() = hi;
    return g;
}

inline bool strictly_increasing(std::span<const double> g)
{
    return std::adjacent_find(g.begin(), g.end(), std::greater_equal<>()) == g.end();
}

/// Linear interpolation of (xs, ys) at x. xs strictly increasing, x inside [xs.front(), xs.back()].
/// -inf nodes propagate: if either bracketing value is -inf the result is -inf.
inline double interp_linear(std::span<const double> xs, std::span<const double> ys, double x)
{
    if (xs.size() != ys.size() || xs.empty()) throw DomainError("interp_linear: size mismatch");
    if (x < xs.front() || x > xs.back()) throw DomainError("interp_linear: point outside grid");
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) return ys.back();
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    if (hi == 0) return ys.front();
    const std::size_t lo = hi - 1;
    if (ys[lo] == kNegInf || ys[hi] == kNegInf) {
        if (x == xs[lo]) return ys[lo];
        return kNegInf;
    }
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + w * (ys[hi] - ys[lo]);
}

}  // namespace kpz
