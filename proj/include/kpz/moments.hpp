#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kpz/common.hpp"

namespace kpz {

/// Weakly decreasing positive parts.
class Partition {
public:
    explicit Partition(std::vector<int> parts) : parts_(std::move(parts))
    {
        if (parts_.empty()) throw DomainError("Partition: no parts");
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            if (parts_[i] < 1) throw DomainError("Partition: parts must be positive");
            if (i > 0 && parts_[i] > parts_[i - 1]) throw DomainError("Partition: parts must be weakly decreasing");
            k_ += parts_[i];
        }
    }

    const std::vector<int>& parts() const { return parts_; }
    int k() const { return k_; }
    int ell() const { return static_cast<int>(parts_.size()); }
    int operator[](std::size_t i) const { return parts_[i]; }

    /// m_j = number of parts equal to j.
    std::map<int, int> multiplicities() const
    {
        std::map<int, int> m;
        for (int p : parts_) ++m[p];
        return m;
    }

    bool operator==(const Partition&) const = default;

    std::string str() const
    {
        std::string s = "(";
        for (std::size_t i = 0; i < parts_.size(); ++i) s += (i ? "," : "") + std::to_string(parts_[i]);
        return s + ")";
    }

private:
    std::vector<int> parts_;
    int k_ = 0;
};

/// All partitions of k in lexicographic order of their part sequences, (1,1,...,1) first.
inline std::vector<Partition> enumerate_partitions(int k)
{
    if (k < 1 || k > 60) throw DomainError("enumerate_partitions: k must lie in [1, 60]");
    std::vector<Partition> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int remaining, int max_part) -> void {
        if (remaining == 0) {
            out.emplace_back(cur);
            return;
        }
        for (int p = 1; p <= std::min(remaining, max_part); ++p) {
            cur.push_back(p);
            self(self, remaining - p, p);
            cur.pop_back();
        }
    };
    rec(rec, k, k);
    return out;
}

/// log psi_T(k).
inline double log_psi(int k, double T)
{
    if (k < 1) throw DomainError("psi: k must be >= 1");
    if (!(T > 0.0)) throw DomainError("psi: T must be positive");
    const double kk = k;
    const double common = std::lgamma(kk + 1.0) + T * kk * kk * kk / 12.0 - std::log(2.0) - 1.5 * std::log(kk);
    if (T >= kPi) return common - 0.5 * std::log(kPi * T);
    return common + 0.5 * (kk - 1.0) * std::log(kPi) - 0.5 * kk * std::log(T);
}

inline double psi(int k, double T) { return std::exp(log_psi(k, T)); }

struct QuadConfig {
    double tolerance = 1e-10;   // relative tolerance of each nested one-dimensional integral
    unsigned max_depth = 15;
    int max_dimension = 3;      // partitions with more parts are skipped
    double box = 8.0;           // integrate the standardised variables over [-box, box]
};

struct MomentResult {
    double value = 0.0;         // E[exp(k T^{1/3} Upsilon_T(0))] (sum over evaluated partitions)
    double log_value = kNegInf;
    double abs_error = 0.0;     // quadrature error estimate plus Gaussian truncation bound
    std::vector<Partition> skipped;
    bool complete() const { return skipped.empty(); }
};

namespace detail {

/// prod_{i<j} (a(l_i - l_j)^2/4 + d^2) / (a(l_i + l_j)^2/4 + d^2), a = T^{2/3}, d = z_i - z_j.
inline double cross_factor(const std::vector<double>& z, const std::vector<int>& lam, double t23)
{
    double f = 1.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t j = i + 1; j < z.size(); ++j) {
            const double d2 = (z[i] - z[j]) * (z[i] - z[j]);
            const double dm = lam[i] - lam[j], dp = lam[i] + lam[j];
            f *= (t23 * dm * dm / 4.0 + d2) / (t23 * dp * dp / 4.0 + d2);
        }
    }
    return f;
}

/// Integral over R^ell of prod e^{-u_i^2} * cross(z) with z_i = u_i / sqrt(T^{1/3} lambda_i).
inline double standardised_integral(const std::vector<int>& lam, double T, const QuadConfig& q, double& err)
{
    using boost::math::quadrature::gauss_kronrod;
    const std::size_t ell = lam.size();
    const double t13 = cube_root(T), t23 = t13 * t13;
    std::vector<double> scale(ell);
    for (std::size_t i = 0; i < ell; ++i) scale[i] = 1.0 / std::sqrt(t13 * lam[i]);
    std::vector<double> z(ell);
    double worst = 0.0;
    auto level = [&](auto&& self, std::size_t d) -> double {
        auto f = [&](double u) {
            z[d] = u * scale[d];
            const double g = std::exp(-u * u);
            return d + 1 == ell ? g * cross_factor(z, lam, t23) : g * self(self, d + 1);
        };
        double e = 0.0;
        const double v = gauss_kronrod<double, 31>::integrate(f, -q.box, q.box, q.max_depth, q.tolerance, &e);
        if (d == 0) worst = e;
        return v;
    };
    const double v = level(level, 0);
    err = worst;
    return v;
}

}  // namespace detail

/// k! sum_{lambda |- k} prod(e^{T lambda_i^3/12}/2pi)/(m_1! m_2! ...) * I_lambda, where I_lambda is the
/// real-axis integral with Gaussian weights e^{-T^{1/3} lambda_i z_i^2}/(T^{1/3} lambda_i) and the
/// pairwise cross-ratio. Partitions beyond `max_dimension` parts are skipped and listed.
inline MomentResult moment_exact(int k, double T, const QuadConfig& q = {})
{
    if (k < 1) throw DomainError("moment_exact: k must be >= 1");
    if (!(T > 0.0)) throw DomainError("moment_exact: T must be positive");
    if (k > 6) throw DomainError("moment_exact: k above 6 is not supported");
    const double t13 = cube_root(T);
    MomentResult res;
    std::vector<double> logs;
    double err_rel_weighted = 0.0;
    for (const auto& lam : enumerate_partitions(k)) {
        if (lam.ell() > q.max_dimension) {
            res.skipped.push_back(lam);
            continue;
        }
        double log_pref = std::lgamma(k + 1.0);
        for (int p : lam.parts()) {
            const double a = t13 * p;
            log_pref += T * p * p * p / 12.0 - std::log(2.0 * kPi) - 1.5 * std::log(a);
        }
        for (const auto& [part, m] : lam.multiplicities()) log_pref -= std::lgamma(m + 1.0);
        double err = 0.0;
        const double I = detail::standardised_integral(lam.parts(), T, q, err);
        if (!(I > 0.0) || !std::isfinite(I)) throw NumericalFault("moment_exact: quadrature failed for " + lam.str());
        // Gaussian mass outside the box in any coordinate, relative to pi^{ell/2}
        const double trunc = lam.ell() * std::erfc(q.box) * std::pow(std::sqrt(kPi), lam.ell());
        logs.push_back(log_pref + std::log(I));
        err_rel_weighted += std::exp(log_pref) * (err + trunc);
    }
    if (logs.empty()) throw DomainError("moment_exact: every partition exceeds the dimension cap");
    res.log_value = log_sum_exp(logs);
    res.value = std::exp(res.log_value);
    res.abs_error = err_rel_weighted;
    return res;
}

/// |det[1/(w_j + lambda_j - w_i)] - Cauchy product| / |Cauchy product|.
inline double cauchy_det_check(const Partition& lambda, const std::vector<std::complex<double>>& w, double pole_tol = 1e-9)
{
    const auto n = static_cast<std::size_t>(lambda.ell());
    if (w.size() != n) throw DomainError("cauchy_det_check: size mismatch");
    Eigen::MatrixXcd m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto den = w[j] + static_cast<double>(lambda[j]) - w[i];
            if (std::abs(den) < pole_tol) throw DomainError("cauchy_det_check: too close to a pole");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0 / den;
        }
    }
    const std::complex<double> det = m.determinant();
    std::complex<double> prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double li = lambda[i];
        prod /= li;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double lj = lambda[j];
            prod *= (w[i] - w[j] + li - lj) * (w[j] - w[i]) / ((w[i] + li - w[j]) * (w[j] + lj - w[i]));
        }
    }
    if (std::abs(prod) == 0.0) throw DomainError("cauchy_det_check: degenerate product");
    return std::abs(det - prod) / std::abs(prod);
}

struct CubicGap {
    double gap = 0.0;
    bool meets_bound = false;
    bool is_equality = false;
};

/// k^3/12 - sum lambda_j^3/12 against (k^2 - k)/4, in exact integer arithmetic.
inline CubicGap partition_cubic_gap(const Partition& lambda)
{
    const long long k = lambda.k();
    long long cubes = 0;
    for (int p : lambda.parts()) cubes += static_cast<long long>(p) * p * p;
    const long long lhs12 = k * k * k - cubes;  // 12 * gap
    const long long rhs12 = 3 * (k * k - k);    // 12 * bound
    return {static_cast<double>(lhs12) / 12.0, lhs12 >= rhs12, lhs12 == rhs12};
}

struct SiegelValue {
    double value = 0.0;
    bool passes = false;
};

inline SiegelValue siegel_check(int k)
{
    if (k < 1) throw DomainError("siegel_check: k must be >= 1");
    const double kk = k;
    const double v = std::exp(1.5 * std::log(kk) - (kk * kk - kk) / 4.0 + kPi * std::sqrt(2.0 * kk / 3.0));
    return {v, v <= 68.0};
}

struct MarkovBound {
    double value = 1.0;     // 69 exp(-max_k [k s T^{1/3} - log psi_T(k)])
    double log_value = 0.0;
    int k_best = 1;
    int k0 = 0;             // floor(2 s^{1/2} T^{-1/3})
    double objective_at_k0 = kNegInf;
};

/// Markov bound on P(Upsilon_T(0) >= s) from the upper moment sandwich, scanning k in [1, k_max].
inline MarkovBound markov_upper_tail(double s, double T, int k_max = 60)
{
    if (!(s > 0.0) || !(T > 0.0)) throw DomainError("markov_upper_tail: s and T must be positive");
    if (k_max < 1) throw DomainError("markov_upper_tail: k_max must be >= 1");
    MarkovBound b;
    b.k0 = static_cast<int>(std::floor(2.0 * std::sqrt(s) / cube_root(T)));
    const int top = std::max(k_max, b.k0);
    double best = kNegInf;
    for (int k = 1; k <= top; ++k) {
        const double obj = k * s * cube_root(T) - log_psi(k, T);
        if (k == b.k0) b.objective_at_k0 = obj;
        if (obj > best) {
            best = obj;
            b.k_best = k;
        }
    }
    b.log_value = std::log(69.0) - best;
    b.value = std::exp(b.log_value);
    return b;
}

enum class MomentSource { PsiSandwich, Exact };

struct PaleyZygmund {
    double value = 0.0;
    int k0 = 0;
    bool condition_holds = false;  // e^{k0 s T^{1/3}} <= psi_T(k0)/2 (T >= pi form)
};

/// 2^{-q} E[e^{k0 X}]^q E[e^{p k0 X}]^{-q/p}, X = T^{1/3} Upsilon_T(0), with
/// k0 = ceil(2 (3(1 + 5 eps/6) s)^{1/2} T^{-1/3}). The psi source uses the sandwich sides that keep
/// the result a valid lower bound (psi below, 69 psi above).
inline PaleyZygmund paley_zygmund_lower(double s, double T, double p, double q, double eps = 0.1,
                                        MomentSource src = MomentSource::PsiSandwich, const QuadConfig& quad = {})
{
    if (!(p > 1.0) || !(q > 1.0) || std::abs(1.0 / p + 1.0 / q - 1.0) > 1e-12)
        throw DomainError("paley_zygmund_lower: need p, q > 1 with 1/p + 1/q = 1");
    if (!(s > 0.0) || !(T > 0.0)) throw DomainError("paley_zygmund_lower: s and T must be positive");
    PaleyZygmund r;
    r.k0 = static_cast<int>(std::ceil(2.0 * std::sqrt(3.0 * (1.0 + 5.0 * eps / 6.0) * s) / cube_root(T)));
    const double pk = p * r.k0;
    if (std::abs(pk - std::round(pk)) > 1e-9) throw DomainError("paley_zygmund_lower: p*k0 must be an integer");
    const int k1 = r.k0, k2 = static_cast<int>(std::round(pk));
    double log_m1 = 0.0, log_m2 = 0.0;
    if (src == MomentSource::PsiSandwich) {
        log_m1 = log_psi(k1, T);
        log_m2 = std::log(69.0) + log_psi(k2, T);
    } else {
        log_m1 = moment_exact(k1, T, quad).log_value;
        const auto m2 = moment_exact(k2, T, quad);
        if (!m2.complete()) throw DomainError("paley_zygmund_lower: exact moment incomplete under dimension cap");
        log_m2 = m2.log_value;
    }
    const double kk = k1;
    const double log_psi_hi = std::lgamma(kk + 1.0) + T * kk * kk * kk / 12.0 - std::log(2.0 * std::sqrt(kPi * T)) - 1.5 * std::log(kk);
    r.condition_holds = k1 * s * cube_root(T) <= std::log(0.5) + log_psi_hi;
    r.value = std::exp(-q * std::log(2.0) + q * log_m1 - q / p * log_m2);
    return r;
}

}  // namespace kpz
