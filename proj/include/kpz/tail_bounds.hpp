#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "kpz/common.hpp"

namespace kpz {

enum class Theorem { Main1, NW_Lower, NW_Upper, Main4, Main3_Br, Main6_Br, UpTailProp };

enum class Regime { I_low, II_low, III_low, i, ii, iii, none };

inline std::string theorem_name(Theorem t)
{
    switch (t) {
    case Theorem::Main1: return "Main1";
    case Theorem::NW_Lower: return "NW_Lower";
    case Theorem::NW_Upper: return "NW_Upper";
    case Theorem::Main4: return "Main4";
    case Theorem::Main3_Br: return "Main3_Br";
    case Theorem::Main6_Br: return "Main6_Br";
    case Theorem::UpTailProp: return "UpTailProp";
    }
    return "?";
}

inline std::string regime_name(Regime r)
{
    switch (r) {
    case Regime::I_low: return "I";
    case Regime::II_low: return "II";
    case Regime::III_low: return "III";
    case Regime::i: return "i";
    case Regime::ii: return "ii";
    case Regime::iii: return "iii";
    case Regime::none: return "none";
    }
    return "?";
}

/// Constants whose existence the theorems assert without giving values.
struct BoundConstants {
    double K = 1.0;
    double K1 = 1.0;
    double K2 = 1.0;
    double s0 = 1.0;
};

struct BoundQuery {
    Theorem theorem = Theorem::Main1;
    double s = 1.0;
    double T = 1.0;
    double eps = 0.1;
    double delta = 0.1;
    double mu = 0.1;
    double zeta = 0.1;
    BoundConstants constants;
};

inline const std::string kConstantsNote = "asymptotic constants unspecified by the paper";

struct BoundResult {
    double value = 1.0;  // raw envelope; may exceed 1
    Regime regime = Regime::none;
    std::optional<double> c1, c2;
    std::string validity_note = kConstantsNote;

    double clamped() const { return std::min(value, 1.0); }
};

/// Upper and lower envelopes of a two-sided statement.
struct BoundPair {
    BoundResult upper;
    BoundResult lower;
};

namespace detail {

inline void require_open(double v, double lo, double hi, const char* what)
{
    if (!(v > lo && v < hi)) throw DomainError(std::string(what) + " out of range");
}

inline void require_positive(double v, const char* what)
{
    if (!(v > 0.0)) throw DomainError(std::string(what) + " must be positive");
}

inline void note_s0(BoundResult& r, double s, double s0)
{
    if (s < s0) r.validity_note += "; s below s0";
}

inline double pow32(double s) { return s * std::sqrt(s); }

}  // namespace detail

/// The three-term lower-tail envelope shared by the general and Brownian lower-tail theorems.
/// Regime is named after the dominant term: I (s^{5/2} term), II (middle), III (s^3 term).
inline BoundResult lower_tail_three_term(double s, double T, double eps, double delta, double K)
{
    detail::require_positive(s, "s");
    detail::require_positive(T, "T");
    detail::require_open(eps, 0.0, 1.0 / 3.0, "eps");
    detail::require_open(delta, 0.0, 1.0 / 3.0, "delta");
    detail::require_positive(K, "K");
    const double t13 = cube_root(T);
    const std::array<double, 3> logs{
        -t13 * 4.0 * (1.0 - eps) * std::pow(s, 2.5) / (15.0 * kPi),
        -K * std::pow(s, 3.0 - delta) - eps * s * t13,
        -(1.0 - eps) * s * s * s / 12.0,
    };
    BoundResult r;
    r.value = std::exp(logs[0]) + std::exp(logs[1]) + std::exp(logs[2]);
    const auto dom = static_cast<std::size_t>(std::max_element(logs.begin(), logs.end()) - logs.begin());
    r.regime = dom == 0 ? Regime::I_low : dom == 1 ? Regime::II_low : Regime::III_low;
    return r;
}

/// P(h^f_T(0) <= -s) upper envelope for f in the Hyp class.
inline BoundResult lower_tail_upper_general(double s, double T, double eps, double delta, double K)
{
    return lower_tail_three_term(s, T, eps, delta, K);
}

/// Two-sided bounds on P(Upsilon_T(0) <= -s).
inline BoundPair nw_lower_tail(double s, double T, double eps, double delta, double K1, double K2)
{
    detail::require_positive(K2, "K2");
    BoundPair p;
    p.upper = lower_tail_three_term(s, T, eps, delta, K1);
    const double t13 = cube_root(T);
    p.lower.value = std::exp(-t13 * 4.0 * std::pow(s, 2.5) * (1.0 + eps) / (15.0 * kPi)) + std::exp(-K2 * s * s * s);
    p.lower.regime = p.upper.regime;
    return p;
}

/// Regime thresholds (low, high) in s: i below low, ii at or above high, iii in between.
inline std::pair<double, double> upper_tail_thresholds(Theorem theorem, double T, double eps, double mu)
{
    const double t23 = std::pow(T, 2.0 / 3.0);
    if (theorem == Theorem::NW_Upper) return {eps * eps * t23 / 8.0, 9.0 / 16.0 / (eps * eps) * t23};
    if (theorem == Theorem::Main4 || theorem == Theorem::Main6_Br) {
        const double a = 1.0 / (1.0 - 2.0 * mu / 3.0);
        return {eps * eps * eps * a * t23 / 8.0, 9.0 / 16.0 / (eps * eps) * a * t23};
    }
    throw DomainError("upper_tail_thresholds: theorem has no regime structure");
}

inline Regime classify_regime(double s, double T, double eps, double mu, Theorem theorem)
{
    if (theorem != Theorem::NW_Upper && theorem != Theorem::Main4 && theorem != Theorem::Main6_Br)
        throw DomainError("classify_regime: theorem has no regime structure");
    if (T <= kPi) return Regime::none;
    const auto [lo, hi] = upper_tail_thresholds(theorem, T, eps, mu);
    if (s >= hi) return Regime::ii;
    if (s < lo) return Regime::i;
    return Regime::iii;
}

namespace detail {

inline BoundPair coefficient_pair(double s, Regime regime, double c1, double c2)
{
    BoundPair p;
    p.upper.regime = p.lower.regime = regime;
    p.upper.c1 = p.lower.c1 = c1;
    p.upper.c2 = p.lower.c2 = c2;
    p.upper.value = std::exp(-c2 * pow32(s));
    p.lower.value = std::exp(-c1 * pow32(s));
    return p;
}

inline BoundPair trivial_pair(const char* why)
{
    BoundPair p;
    p.upper.value = 1.0;
    p.lower.value = 0.0;
    p.upper.validity_note = p.lower.validity_note = std::string(kConstantsNote) + "; " + why;
    return p;
}

}  // namespace detail

/// e^{-c1 s^{3/2}} <= P(Upsilon_T(0) >= s) <= e^{-c2 s^{3/2}} with the explicit coefficients for T > pi.
/// For T <= pi only the existence statement applies and the trivial pair (1, 0) is returned.
inline BoundPair nw_upper_tail(double s, double T, double eps, double s0 = 1.0)
{
    detail::require_positive(s, "s");
    detail::require_positive(T, "T");
    detail::require_open(eps, 0.0, 0.5, "eps");
    const Regime reg = classify_regime(s, T, eps, 0.0, Theorem::NW_Upper);
    if (reg == Regime::none) return detail::trivial_pair("explicit coefficients need T > pi");
    double c1 = 0.0, c2 = 0.0;
    switch (reg) {
    case Regime::i: c1 = 4.0 / 3.0 * (1.0 + eps); c2 = 4.0 / 3.0 * (1.0 - eps); break;
    case Regime::ii: c1 = 4.0 * std::sqrt(3.0) * (1.0 + eps); c2 = 4.0 / 3.0 * (1.0 - eps); break;
    default: c1 = std::pow(2.0, 3.5) / (eps * eps * eps); c2 = 4.0 / 3.0 * eps; break;
    }
    auto p = detail::coefficient_pair(s, reg, c1, c2);
    detail::note_s0(p.upper, s, s0);
    detail::note_s0(p.lower, s, s0);
    return p;
}

/// Upper-tail bounds on P(h^f_T(0) >= s) for f in the Hyp class.
inline BoundPair general_upper_tail(double s, double T, double eps, double mu, double s0 = 1.0)
{
    detail::require_positive(s, "s");
    detail::require_positive(T, "T");
    detail::require_open(eps, 0.0, 0.5, "eps");
    detail::require_open(mu, 0.0, 0.5, "mu");
    const Regime reg = classify_regime(s, T, eps, mu, Theorem::Main4);
    if (reg == Regime::none) return detail::trivial_pair("explicit coefficients need T > pi");
    const double c2_outer = std::sqrt(2.0) / 3.0 * (1.0 - mu) * (1.0 - eps);
    double c1 = 0.0, c2 = 0.0;
    switch (reg) {
    case Regime::i: c1 = 8.0 / 3.0 * (1.0 + mu) * (1.0 + eps); c2 = c2_outer; break;
    case Regime::ii: c1 = 8.0 * std::sqrt(3.0) * (1.0 + mu) * (1.0 + eps); c2 = c2_outer; break;
    default: c1 = std::pow(2.0, 4.5) / (eps * eps * eps) * (1.0 + mu); c2 = std::sqrt(2.0) / 3.0 * (1.0 - mu) * eps; break;
    }
    auto p = detail::coefficient_pair(s, reg, c1, c2);
    detail::note_s0(p.upper, s, s0);
    detail::note_s0(p.lower, s, s0);
    return p;
}

/// P(h^Br_T(0) <= -s) upper envelope.
inline BoundResult brownian_lower_tail(double s, double T, double eps, double delta, double K)
{
    return lower_tail_three_term(s, T, eps, delta, K);
}

/// Bounds on P(h^Br_T(0) > s): the general pair with the extra e^{-(mu s)^{3/2}/(9 sqrt 3)} term on the upper side.
inline BoundPair brownian_upper_tail(double s, double T, double eps, double mu, double s0 = 1.0)
{
    auto p = general_upper_tail(s, T, eps, mu, s0);
    const double extra = std::exp(-detail::pow32(mu * s) / (9.0 * std::sqrt(3.0)));
    if (p.upper.regime == Regime::none) return p;
    p.upper.value += extra;
    return p;
}

/// Upper-tail Laplace-side quantities: upper = e^{-T^{1/3} zeta s} + e^{-(4/3)(1-eps)s^{3/2}},
/// lower = e^{-T^{1/3}(1+zeta)s} + e^{-(4/3)(1+eps)s^{3/2}}.
inline BoundPair nw_uptail_laplace_bounds(double s, double T, double eps, double zeta)
{
    detail::require_positive(s, "s");
    detail::require_positive(T, "T");
    detail::require_open(eps, 0.0, 1.0, "eps");
    if (!(zeta > 0.0) || zeta > eps) throw DomainError("zeta must lie in (0, eps]");
    const double t13 = cube_root(T), s32 = detail::pow32(s);
    BoundPair p;
    p.upper.value = std::exp(-t13 * zeta * s) + std::exp(-4.0 / 3.0 * (1.0 - eps) * s32);
    p.lower.value = std::exp(-t13 * (1.0 + zeta) * s) + std::exp(-4.0 / 3.0 * (1.0 + eps) * s32);
    return p;
}

/// Dispatch on a query. Two-sided theorems return both envelopes; one-sided ones leave `lower` at 0.
inline BoundPair evaluate(const BoundQuery& q)
{
    const auto& k = q.constants;
    switch (q.theorem) {
    case Theorem::Main1: return {lower_tail_upper_general(q.s, q.T, q.eps, q.delta, k.K), BoundResult{0.0}};
    case Theorem::Main3_Br: return {brownian_lower_tail(q.s, q.T, q.eps, q.delta, k.K), BoundResult{0.0}};
    case Theorem::NW_Lower: return nw_lower_tail(q.s, q.T, q.eps, q.delta, k.K1, k.K2);
    case Theorem::NW_Upper: return nw_upper_tail(q.s, q.T, q.eps, k.s0);
    case Theorem::Main4: return general_upper_tail(q.s, q.T, q.eps, q.mu, k.s0);
    case Theorem::Main6_Br: return brownian_upper_tail(q.s, q.T, q.eps, q.mu, k.s0);
    case Theorem::UpTailProp: return nw_uptail_laplace_bounds(q.s, q.T, q.eps, q.zeta);
    }
    throw DomainError("evaluate: unknown theorem");
}

/// Which tail of the observable each theorem speaks about.
inline bool theorem_is_lower_tail(Theorem t)
{
    return t == Theorem::Main1 || t == Theorem::Main3_Br || t == Theorem::NW_Lower;
}

}  // namespace kpz
