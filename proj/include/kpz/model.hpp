#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kpz/common.hpp"
#include "kpz/random.hpp"

namespace kpz {

/// Parameters (C, nu, theta, kappa, M) of the admissible initial-data class:
/// f(y) <= C + nu*y^2/2^{2/3} everywhere, and f >= -kappa on some length-theta
/// subinterval of [-M, M].
struct HypParams {
    double C = 1.0;
    double nu = 0.5;
    double theta = 1.0;
    double kappa = 1.0;
    double M = 1.0;

    void validate() const
    {
        if (!(nu > 0.0 && nu < 1.0)) throw DomainError("Hyp: nu must lie in (0,1)");
        if (!(theta > 0.0 && kappa > 0.0 && M > 0.0)) throw DomainError("Hyp: theta, kappa, M must be positive");
        if (theta > 2.0 * M) throw DomainError("Hyp: theta must not exceed 2M");
        if (!std::isfinite(C)) throw DomainError("Hyp: C must be finite");
    }
};

/// Piecewise-linear scaled profile y -> f(y) on a bounded grid. Values may be -inf;
/// outside the grid the profile is -inf.
class Profile {
public:
    Profile() = default;
    Profile(std::vector<double> y, std::vector<double> f) : y_(std::move(y)), f_(std::move(f))
    {
        if (y_.size() != f_.size() || y_.size() < 2) throw DomainError("Profile: need >= 2 (y, f) pairs");
        if (!strictly_increasing(y_)) throw DomainError("Profile: grid must be strictly increasing");
        for (double v : f_) {
            if (std::isnan(v) || v == kPosInf) throw DomainError("Profile: values must be finite or -inf");
        }
    }

    static Profile constant(double value, double lo, double hi, std::size_t n)
    {
        return Profile(linspace(lo, hi, n), std::vector<double>(n, value));
    }

    template <class Fn>
    static Profile sampled(Fn&& fn, double lo, double hi, std::size_t n)
    {
        auto y = linspace(lo, hi, n);
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = fn(y[i]);
        return Profile(std::move(y), std::move(f));
    }

    double operator()(double y) const
    {
        if (y_.empty() || y < y_.front() || y > y_.back()) return kNegInf;
        return interp_linear(y_, f_, y);
    }

    const std::vector<double>& grid() const { return y_; }
    const std::vector<double>& values() const { return f_; }
    double lo() const { return y_.front(); }
    double hi() const { return y_.back(); }

private:
    std::vector<double> y_;
    std::vector<double> f_;
};

/// Two-column CSV (y, f(y)). Lines starting with '#' and a non-numeric header are skipped;
/// "-inf" (any case) is accepted as a value.
inline Profile load_profile_csv(std::istream& in)
{
    std::vector<double> y, f;
    std::string line;
    std::size_t lineno = 0;
    auto parse = [](std::string s, double& out) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        std::string lower;
        for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (lower == "-inf" || lower == "-infinity") {
            out = kNegInf;
            return true;
        }
        try {
            std::size_t used = 0;
            out = std::stod(s, &used);
            return used == s.size();
        } catch (const std::exception&) {
            return false;
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DomainError("profile CSV line " + std::to_string(lineno) + ": expected two columns");
        double a = 0.0, b = 0.0;
        const bool ok = parse(line.substr(0, comma), a) && parse(line.substr(comma + 1), b);
        if (!ok) {
            if (y.empty()) continue;  // header
            throw DomainError("profile CSV line " + std::to_string(lineno) + ": unparsable value");
        }
        y.push_back(a);
        f.push_back(b);
    }
    return Profile(std::move(y), std::move(f));
}

inline Profile load_profile_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open profile file " + path);
    return load_profile_csv(in);
}

struct NarrowWedge {};
struct Flat {};
struct BrownianTwoSided {
    std::uint64_t seed = 0;
    double diffusion = 1.0;  // variance per unit length in unscaled coordinates
};
struct GeneralScaled {
    Profile profile;
    HypParams hyp;
};

using InitialData = std::variant<NarrowWedge, Flat, BrownianTwoSided, GeneralScaled>;

inline std::string initial_data_name(const InitialData& d)
{
    return std::visit(
        [](const auto& v) -> std::string {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, NarrowWedge>) return "narrow_wedge";
            else if constexpr (std::is_same_v<V, Flat>) return "flat";
            else if constexpr (std::is_same_v<V, BrownianTwoSided>) return "brownian";
            else return "general";
        },
        d);
}

struct HypReport {
    bool growth_ok = false;  // f(y) <= C + nu y^2 / 2^{2/3}
    bool floor_ok = false;   // length-theta witness with f >= -kappa inside [-M, M]
    double worst_excess = kNegInf;  // max of f(y) - C - nu y^2/2^{2/3}
    double worst_y = 0.0;
    std::optional<std::pair<double, double>> witness;

    bool valid() const { return growth_ok && floor_ok; }
};

/// Checks both class conditions for a gridded piecewise-linear profile.
/// The growth bound is maximised exactly on each linear segment; the witness search is
/// confined to [-M, M] and returns a length-theta interval centred in the longest
/// admissible stretch.
inline HypReport validate_hyp(const Profile& profile, const HypParams& hyp)
{
    hyp.validate();
    const auto& y = profile.grid();
    const auto& f = profile.values();
    if (profile.lo() > -hyp.M || profile.hi() < hyp.M) throw DomainError("validate_hyp: grid does not cover [-M, M]");

    HypReport rep;
    const double a = hyp.nu / kTwoTwoThirds;
    auto excess = [&](double yy, double fy) { return fy - hyp.C - a * yy * yy; };
    auto consider = [&](double yy, double fy) {
        if (fy == kNegInf) return;
        const double e = excess(yy, fy);
        if (e > rep.worst_excess) {
            rep.worst_excess = e;
            rep.worst_y = yy;
        }
    };
    for (std::size_t i = 0; i < y.size(); ++i) consider(y[i], f[i]);
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        if (f[i] == kNegInf || f[i + 1] == kNegInf) continue;
        // f linear minus a convex parabola is concave: maximiser at slope / (2a) if interior
        const double slope = (f[i + 1] - f[i]) / (y[i + 1] - y[i]);
        const double ystar = slope / (2.0 * a);
        if (ystar > y[i] && ystar < y[i + 1]) consider(ystar, f[i] + slope * (ystar - y[i]));
    }
    rep.growth_ok = rep.worst_excess <= 0.0;

    // Exact superlevel set {f >= -kappa} inside [-M, M] for the linear interpolant.
    std::vector<double> cuts{-hyp.M, hyp.M};
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        if (y[i] > -hyp.M && y[i] < hyp.M) cuts.push_back(y[i]);
        if (f[i] == kNegInf || f[i + 1] == kNegInf) continue;
        const double d0 = f[i] + hyp.kappa, d1 = f[i + 1] + hyp.kappa;
        if ((d0 < 0.0) != (d1 < 0.0)) {
            const double yc = y[i] + (y[i + 1] - y[i]) * d0 / (d0 - d1);
            if (yc > -hyp.M && yc < hyp.M) cuts.push_back(yc);
        }
    }
    if (y.back() > -hyp.M && y.back() < hyp.M) cuts.push_back(y.back());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double best_len = -1.0, best_lo = 0.0, run_lo = 0.0;
    bool in_run = false;
    constexpr double tol = 1e-12;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        const bool ok = profile(cuts[i]) >= -hyp.kappa - tol && profile(mid) >= -hyp.kappa - tol &&
                        profile(cuts[i + 1]) >= -hyp.kappa - tol;
        if (ok && !in_run) {
            in_run = true;
            run_lo = cuts[i];
        }
        if (!ok && in_run) {
            in_run = false;
            if (cuts[i] - run_lo > best_len) best_len = cuts[i] - run_lo, best_lo = run_lo;
        }
    }
    if (in_run && cuts.back() - run_lo > best_len) best_len = cuts.back() - run_lo, best_lo = run_lo;
    if (best_len >= hyp.theta - tol) {
        rep.floor_ok = true;
        const double centre = best_lo + 0.5 * best_len;
        rep.witness = std::make_pair(centre - 0.5 * hyp.theta, centre + 0.5 * hyp.theta);
    }
    return rep;
}

/// Unscaled initial height H_0 on a physical grid, or a delta marker for narrow wedge.
struct UnscaledInitial {
    enum class Kind { Delta, Function };
    Kind kind = Kind::Function;
    std::vector<double> x;
    std::vector<double> h;  // empty for Delta; may contain -inf
};

/// Two-sided Brownian path with B(0) = 0 sampled at the (sorted) points x.
inline std::vector<double> sample_two_sided_bm(std::span<const double> x, double diffusion, Engine& eng)
{
    std::vector<double> b(x.size(), 0.0);
    PolarNormal normal;
    const auto first_nonneg = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), 0.0) - x.begin());
    double prev_x = 0.0, prev_b = 0.0;
    for (std::size_t i = first_nonneg; i < x.size(); ++i) {
        prev_b += std::sqrt(diffusion * (x[i] - prev_x)) * normal(eng);
        prev_x = x[i];
        b[i] = prev_b;
    }
    prev_x = 0.0, prev_b = 0.0;
    for (std::size_t i = first_nonneg; i-- > 0;) {
        prev_b += std::sqrt(diffusion * (prev_x - x[i])) * normal(eng);
        prev_x = x[i];
        b[i] = prev_b;
    }
    return b;
}

/// H_0(x) = T^{1/3} f((2T)^{-2/3} x) for scaled profiles; zero for flat; a Brownian draw
/// (from `eng`) for two-sided Brownian data; a delta marker for narrow wedge.
inline UnscaledInitial make_unscaled_initial(const InitialData& data, double T, std::span<const double> x_grid,
                                             Engine* eng = nullptr)
{
    if (!(T > 0.0)) throw DomainError("make_unscaled_initial: T must be positive");
    UnscaledInitial out;
    if (std::holds_alternative<NarrowWedge>(data)) {
        out.kind = UnscaledInitial::Kind::Delta;
        out.x = {0.0};
        return out;
    }
    if (!strictly_increasing(x_grid)) throw DomainError("make_unscaled_initial: grid must be strictly increasing");
    out.x.assign(x_grid.begin(), x_grid.end());
    if (std::holds_alternative<Flat>(data)) {
        out.h.assign(x_grid.size(), 0.0);
    } else if (const auto* br = std::get_if<BrownianTwoSided>(&data)) {
        if (eng) {
            out.h = sample_two_sided_bm(x_grid, br->diffusion, *eng);
        } else {
            Engine local = replica_engine(br->seed, 0, 0xB0);
            out.h = sample_two_sided_bm(x_grid, br->diffusion, local);
        }
    } else {
        const auto& g = std::get<GeneralScaled>(data);
        const double t13 = cube_root(T);
        const double inv = 1.0 / std::pow(2.0 * T, 2.0 / 3.0);
        out.h.resize(x_grid.size());
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            const double fy = g.profile(x_grid[i] * inv);
            out.h[i] = fy == kNegInf ? kNegInf : t13 * fy;
        }
    }
    return out;
}

enum class HeightKind { Upsilon, GeneralHeight, BrownianHeight };

/// Centred and scaled one-time height profile on a y grid.
struct ScaledHeightSample {
    double T = 1.0;
    std::vector<double> y;
    std::vector<double> values;
    HeightKind kind = HeightKind::Upsilon;
};

/// Physical positions X = (2T)^{2/3} y at which a height must be sampled for `y`.
inline std::vector<double> physical_positions(std::span<const double> y, double T)
{
    const double s = std::pow(2.0 * T, 2.0 / 3.0);
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = s * y[i];
    return x;
}

/// Applies the narrow-wedge (Upsilon) or general-data centring to H(2T, (2T)^{2/3} y).
inline double scale_center_value(double H, double T, HeightKind kind)
{
    const double shift = kind == HeightKind::Upsilon ? T / 12.0 : T / 12.0 - (2.0 / 3.0) * std::log(2.0 * T);
    return (H + shift) / cube_root(T);
}

inline ScaledHeightSample scale_center_height(std::span<const double> H, std::span<const double> y, double T,
                                              HeightKind kind)
{
    if (!(T > 0.0)) throw DomainError("scale_center_height: T must be positive");
    if (H.size() != y.size()) throw DomainError("scale_center_height: height and y grids differ in size");
    if (!strictly_increasing(y)) throw DomainError("scale_center_height: y grid must be strictly increasing");
    ScaledHeightSample s;
    s.T = T;
    s.kind = kind;
    s.y.assign(y.begin(), y.end());
    s.values.resize(H.size());
    for (std::size_t i = 0; i < H.size(); ++i) {
        if (!std::isfinite(H[i])) throw DomainError("scale_center_height: non-finite height");
        s.values[i] = scale_center_value(H[i], T, kind);
    }
    return s;
}

}  // namespace kpz
