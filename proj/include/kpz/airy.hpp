#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/special_functions/airy.hpp>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <lapacke.h>

#include "kpz/common.hpp"
#include "kpz/random.hpp"
#include "kpz/statistics.hpp"

namespace kpz {

/// Top K edge-scaled eigenvalues a_1 > ... > a_K of an N x N GUE matrix.
struct AiryEdgeSample {
    std::size_t N = 0;
    std::vector<double> points;
};

/// Tridiagonal beta = 2 model: diagonal N(0,1), off-diagonal chi_{2(N-i)}/sqrt 2, scaled as
/// a = N^{1/6} (lambda - 2 sqrt N).
inline AiryEdgeSample sample_gue_edge(std::size_t N, std::size_t K, Engine& eng)
{
    if (N < 64) throw DomainError("sample_gue_edge: N must be >= 64");
    if (K < 1 || K > 16 || K > N) throw DomainError("sample_gue_edge: K must lie in [1, min(16, N)]");
    boost::random::normal_distribution<double> normal;
    std::vector<double> diag(N), off(N - 1);
    for (std::size_t i = 0; i < N; ++i) diag[i] = normal(eng);
    for (std::size_t i = 1; i < N; ++i) {
        boost::random::chi_squared_distribution<double> chi2(2.0 * static_cast<double>(N - i));
        off[i - 1] = std::sqrt(chi2(eng) / 2.0);
    }
    // bisection for the K largest eigenvalues only
    const auto n = static_cast<lapack_int>(N);
    lapack_int found = 0, nsplit = 0;
    std::vector<double> w(N);
    std::vector<lapack_int> iblock(N), isplit(N);
    const lapack_int info = LAPACKE_dstebz('I', 'E', n, 0.0, 0.0, n - static_cast<lapack_int>(K) + 1, n, 0.0, diag.data(),
                                           off.data(), &found, &nsplit, w.data(), iblock.data(), isplit.data());
    if (info != 0 || found != static_cast<lapack_int>(K)) throw NumericalFault("sample_gue_edge: eigen-solver failure");
    const double centre = 2.0 * std::sqrt(static_cast<double>(N)), scale = std::pow(static_cast<double>(N), 1.0 / 6.0);
    AiryEdgeSample s;
    s.N = N;
    for (std::size_t k = 0; k < K; ++k) s.points.push_back(scale * (w[K - 1 - k] - centre));
    return s;
}

inline std::vector<AiryEdgeSample> sample_gue_edges(std::size_t N, std::size_t K, std::size_t n, std::uint64_t seed)
{
    std::vector<AiryEdgeSample> out;
    out.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        Engine eng = replica_engine(seed, r, 5);
        out.push_back(sample_gue_edge(N, K, eng));
    }
    return out;
}

/// I_s(x) = 1/(1 + e^{T^{1/3}(x - s)}).
inline double fermi_factor(double x, double s, double T)
{
    const double u = cube_root(T) * (x - s);
    return u > 0.0 ? std::exp(-u) / (1.0 + std::exp(-u)) : 1.0 / (1.0 + std::exp(u));
}

/// J_s(x) = log(1 + e^{T^{1/3}(x - s)}), so that I_s = e^{-J_s}.
inline double log_factor(double x, double s, double T) { return softplus(cube_root(T) * (x - s)); }

struct LaplaceEstimate {
    double mean = 0.0;
    double se = 0.0;
    double truncation_bound = 0.0;  // bound on the neglected sum_{k>K} J_s(a_k), averaged over samples
};

/// Envelope of sum_{k>K} J_s(a_k): the points beyond a_K are placed along the Airy-zero profile
/// a_k ~ a_K ((k - 1/4)/(K - 1/4))^{2/3}, and J_s(x) <= e^{T^{1/3}(x - s)}.
inline double airy_tail_sum_bound(double a_K, std::size_t K, double s, double T, std::size_t terms = 100000)
{
    const double t13 = cube_root(T);
    const double base = K - 0.25;
    double sum = 0.0;
    for (std::size_t k = K + 1; k <= K + terms; ++k) {
        const double ak = std::min(a_K, a_K * std::pow((k - 0.25) / base, 2.0 / 3.0));
        const double term = std::exp(t13 * (ak - s));
        sum += term;
        if (term < 1e-300) break;
    }
    return sum;
}

/// Monte Carlo estimate of E[prod_{k <= K} I_s(a_k)].
inline LaplaceEstimate laplace_rhs(const std::vector<AiryEdgeSample>& samples, double s, double T, double tolerance = 1e-3)
{
    if (samples.empty()) throw DomainError("laplace_rhs: no samples");
    std::vector<double> v;
    v.reserve(samples.size());
    double trunc = 0.0;
    for (const auto& smp : samples) {
        double log_prod = 0.0;
        for (double a : smp.points) log_prod -= log_factor(a, s, T);
        v.push_back(std::exp(log_prod));
        trunc += airy_tail_sum_bound(smp.points.back(), smp.points.size(), s, T);
    }
    const auto m = stats::mean_se(v);
    LaplaceEstimate e{m.mean, m.se, trunc / static_cast<double>(samples.size())};
    if (e.truncation_bound > tolerance) throw DomainError("laplace_rhs: truncation bound exceeds tolerance; increase K");
    return e;
}

/// Monte Carlo estimate of E[exp(-exp(T^{1/3}(Upsilon - s)))].
inline LaplaceEstimate laplace_lhs(const std::vector<double>& upsilon, double s, double T)
{
    if (upsilon.empty()) throw DomainError("laplace_lhs: no samples");
    std::vector<double> v;
    v.reserve(upsilon.size());
    const double t13 = cube_root(T);
    for (double u : upsilon) {
        const double x = t13 * (u - s);
        v.push_back(x > 700.0 ? 0.0 : std::exp(-std::exp(x)));
    }
    const auto m = stats::mean_se(v);
    return {m.mean, m.se, 0.0};
}

/// -(3 pi k / 2)^{2/3}.
inline double airy_zero_bound(int k)
{
    if (k < 1) throw DomainError("airy_zero_bound: k must be >= 1");
    return -std::pow(1.5 * kPi * k, 2.0 / 3.0);
}

struct AiryZeroComparison {
    int k = 0;
    double zero = 0.0;
    double bound = 0.0;
    bool holds = false;  // zero <= bound
};

/// Compares the bound with the true Airy zeros for k = 1..k_max.
inline std::vector<AiryZeroComparison> airy_zero_bound_check(int k_max)
{
    std::vector<AiryZeroComparison> out;
    for (int k = 1; k <= k_max; ++k) {
        const double z = boost::math::airy_ai_zero<double>(k);
        const double b = airy_zero_bound(k);
        out.push_back({k, z, b, z <= b});
    }
    return out;
}

}  // namespace kpz
