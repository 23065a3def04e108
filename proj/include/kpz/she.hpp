#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

#include "kpz/common.hpp"
#include "kpz/model.hpp"
#include "kpz/random.hpp"
#include "kpz/statistics.hpp"

namespace kpz {

/// Lattice discretisation of dZ = (1/2) Z'' dt + Z xi on [-L, L] with Dirichlet zero ends.
struct SolverConfig {
    double dx = 0.05;
    double dt = 0.0;          // 0 selects dx^2 / 4
    double half_width = 0.0;  // 0 selects the smallest L meeting the boundary rule
    std::uint64_t seed = 1;
    bool noise = true;
    double boundary_tol = 1e-8;  // admissible heat-kernel mass within `edge_sites` of an end
    int edge_sites = 10;

    double resolved_dt() const { return dt > 0.0 ? dt : 0.25 * dx * dx; }

    void validate() const
    {
        if (!(dx > 0.0)) throw ConfigError("SolverConfig: dx must be positive");
        if (resolved_dt() > 0.5 * dx * dx * (1.0 + 1e-12)) throw ConfigError("SolverConfig: dt must not exceed dx^2/2");
        if (half_width < 0.0) throw ConfigError("SolverConfig: half_width must be non-negative");
        if (!(boundary_tol > 0.0 && boundary_tol < 1.0)) throw ConfigError("SolverConfig: boundary_tol must lie in (0,1)");
        if (edge_sites < 1) throw ConfigError("SolverConfig: edge_sites must be positive");
    }
};

/// Smallest half-width (a multiple of dx) such that a heat kernel started anywhere in
/// [-window, window] leaves at most `boundary_tol` of its mass within `edge_sites` of +-L by time t.
inline double auto_half_width(const SolverConfig& cfg, double t, double window = 0.0)
{
    static const boost::math::normal_distribution<double> unit;
    const double z = boost::math::quantile(boost::math::complement(unit, 0.5 * cfg.boundary_tol));
    const double L = window + cfg.edge_sites * cfg.dx + z * std::sqrt(t);
    return std::ceil(L / cfg.dx - 1e-9) * cfg.dx;
}

/// Flushes subnormal results to zero while in scope. Heat-kernel tails at the edge of the
/// light cone otherwise spend most of the run in slow subnormal arithmetic.
class FlushSubnormals {
public:
#if defined(__SSE2__)
    FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
    ~FlushSubnormals() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#endif
};

/// Positive SHE solution on the lattice x_i = -L + i dx at time t.
struct LatticeField {
    double dx = 0.05;
    double half_width = 8.0;
    double t = 0.0;
    std::vector<double> Z;

    std::size_t size() const { return Z.size(); }
    double x(std::size_t i) const { return -half_width + dx * static_cast<double>(i); }

    double mass() const
    {
        double m = 0.0;
        for (double z : Z) m += z;
        return m * dx;
    }

    /// Linear interpolation of Z at physical position X.
    double at(double X) const
    {
        const double u = (X + half_width) / dx;
        if (u < 0.0 || u > static_cast<double>(Z.size() - 1)) throw DomainError("LatticeField::at: point outside lattice");
        const auto i = std::min(static_cast<std::size_t>(u), Z.size() - 2);
        const double w = u - static_cast<double>(i);
        return (1.0 - w) * Z[i] + w * Z[i + 1];
    }

    /// Mass carried by the `sites` outermost sites on each side.
    double edge_mass(int sites) const
    {
        double edge = 0.0;
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(sites), Z.size() / 2);
        for (std::size_t i = 0; i < k; ++i) edge += Z[i] + Z[Z.size() - 1 - i];
        return edge * dx;
    }

    double edge_mass_fraction(int sites) const
    {
        const double total = mass();
        return total > 0.0 ? edge_mass(sites) / total : 0.0;
    }
};

/// Elementwise H = log Z.
inline std::vector<double> cole_hopf(const LatticeField& field)
{
    std::vector<double> h(field.Z.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(field.Z[i] > 0.0)) throw NumericalFault("cole_hopf: non-positive field value at site " + std::to_string(i));
        h[i] = std::log(field.Z[i]);
    }
    return h;
}

/// Explicit heat step followed by the multiplicative update Z <- Z exp(sqrt(dt/dx) g - dt/(2dx)).
/// One solver instance owns the noise table and can be reused across replicas.
class SheSolver {
public:
    SheSolver(SolverConfig cfg, double t_final, double window = 0.0) : cfg_(cfg), t_final_(t_final)
    {
        cfg_.validate();
        if (!(t_final > 0.0)) throw ConfigError("SheSolver: final time must be positive");
        dt_nominal_ = cfg_.resolved_dt();
        steps_ = static_cast<std::size_t>(std::ceil(t_final / dt_nominal_ - 1e-9));
        dt_ = t_final / static_cast<double>(steps_);
        half_width_ = cfg_.half_width > 0.0 ? cfg_.half_width : auto_half_width(cfg_, t_final, window);
        sites_ = 2 * static_cast<std::size_t>(std::llround(half_width_ / cfg_.dx)) + 1;
        half_width_ = cfg_.dx * static_cast<double>(sites_ / 2);
        if (cfg_.noise) table_ = std::make_shared<NoiseFactorTable>(std::sqrt(dt_ / cfg_.dx));
    }

    const SolverConfig& config() const { return cfg_; }
    double half_width() const { return half_width_; }
    double dt() const { return dt_; }
    std::size_t steps() const { return steps_; }
    std::size_t sites() const { return sites_; }

    /// Initial lattice data: 1/dx at the origin for narrow wedge, 1 for flat, exp(H_0) otherwise.
    LatticeField initial_field(const InitialData& data, double T, Engine& eng) const
    {
        LatticeField f;
        f.dx = cfg_.dx;
        f.half_width = half_width_;
        f.t = 0.0;
        f.Z.assign(sites_, 0.0);
        if (std::holds_alternative<NarrowWedge>(data)) {
            f.Z[sites_ / 2] = 1.0 / cfg_.dx;
        } else if (std::holds_alternative<Flat>(data)) {
            std::fill(f.Z.begin() + 1, f.Z.end() - 1, 1.0);
        } else {
            std::vector<double> xs(sites_);
            for (std::size_t i = 0; i < sites_; ++i) xs[i] = f.x(i);
            const auto h0 = make_unscaled_initial(data, T, xs, &eng);
            for (std::size_t i = 1; i + 1 < sites_; ++i) f.Z[i] = h0.h[i] == kNegInf ? 0.0 : std::exp(h0.h[i]);
        }
        return f;
    }

    /// Runs one replica to t_final. `on_step(step, field)` is invoked after every step whose
    /// index is listed in `observe_steps` (sorted).
    LatticeField run(const InitialData& data, double T, std::uint64_t replica,
                     const std::vector<std::size_t>& observe_steps = {},
                     const std::function<void(std::size_t, const LatticeField&)>& on_step = {}) const
    {
        const FlushSubnormals ftz;
        Engine eng = replica_engine(cfg_.seed, replica);
        LatticeField f = initial_field(data, T, eng);
        std::size_t next_obs = 0;
        if (next_obs < observe_steps.size() && observe_steps[next_obs] == 0) {
            on_step(0, f);
            ++next_obs;
        }
        const double r = dt_ / (2.0 * cfg_.dx * cfg_.dx);
        const double* table = table_ ? table_->data() : nullptr;
        const std::size_t n = sites_;
        // support grows by one site per step; sites outside [lo, hi] stay exactly zero
        std::size_t lo = n, hi = 0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (f.Z[i] != 0.0) {
                lo = std::min(lo, i);
                hi = i;
            }
        }
        if (lo > hi) lo = hi = n / 2;
        std::vector<double> next(n, 0.0);
        std::vector<std::uint16_t> idx(n);
        for (std::size_t step = 1; step <= steps_; ++step) {
            lo = std::max<std::size_t>(lo - 1, 1);
            hi = std::min(hi + 1, n - 2);
            const double* z = f.Z.data();
            double* out = next.data();
            for (std::size_t i = lo; i <= hi; ++i) out[i] = z[i] + r * (z[i - 1] - 2.0 * z[i] + z[i + 1]);
            if (table) {
                std::size_t i = lo;
                for (; i + 3 <= hi; i += 4) {
                    std::uint64_t bits = eng();
                    for (int k = 0; k < 4; ++k, bits >>= 16) idx[i + k] = static_cast<std::uint16_t>(bits);
                }
                if (i <= hi) {
                    std::uint64_t bits = eng();
                    for (; i <= hi; ++i, bits >>= 16) idx[i] = static_cast<std::uint16_t>(bits);
                }
                for (std::size_t j = lo; j <= hi; ++j) out[j] *= table[idx[j]];
            }
            f.Z.swap(next);
            if (next_obs < observe_steps.size() && observe_steps[next_obs] == step) {
                f.t = dt_ * static_cast<double>(step);
                on_step(step, f);
                ++next_obs;
            }
        }
        f.t = t_final_;
        if (steps_ + 1 >= n / 2) {
            for (std::size_t i = 1; i + 1 < n; ++i) {
                if (!(f.Z[i] > 0.0)) throw NumericalFault("SheSolver: non-positive interior value");
            }
        }
        return f;
    }

    /// Step index closest to time t.
    std::size_t step_for_time(double t) const
    {
        if (t < 0.0 || t > t_final_ * (1.0 + 1e-12)) throw DomainError("SheSolver: observation time outside [0, t_final]");
        return static_cast<std::size_t>(std::llround(t / dt_));
    }

private:
    SolverConfig cfg_;
    double t_final_;
    double dt_nominal_ = 0.0;
    double dt_ = 0.0;
    std::size_t steps_ = 0;
    double half_width_ = 0.0;
    std::size_t sites_ = 0;
    std::shared_ptr<NoiseFactorTable> table_;
};

/// Single replica solve to time 2T.
inline LatticeField solve_she(const InitialData& initial, double T, const SolverConfig& cfg, std::uint64_t replica = 0)
{
    if (!(T > 0.0)) throw DomainError("solve_she: T must be positive");
    SheSolver solver(cfg, 2.0 * T);
    return solver.run(initial, T, replica);
}

struct SpaceTimePoint {
    double t = 0.0;
    double x = 0.0;
};

/// Row-major replica x point table.
struct SampleMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }

    std::vector<double> column(std::size_t c) const
    {
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
        return out;
    }
};

struct SimulationDiagnostics {
    double half_width = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;
    double edge_mass_fraction = 0.0;  // replica-averaged edge mass over replica-averaged total mass
    bool boundary_ok = true;
};

/// Monte Carlo driver: log Z at each space-time point for replicas first..first+n-1.
/// `T` is the scaling time used to build scaled/Brownian initial data.
/// Output is a pure function of (cfg.seed, replica range).
inline SampleMatrix sample_log_field(const InitialData& initial, double T, const std::vector<SpaceTimePoint>& points,
                                     std::size_t n, const SolverConfig& cfg, std::uint64_t first = 0,
                                     SimulationDiagnostics* diag = nullptr)
{
    if (points.empty()) throw DomainError("sample_log_field: no points requested");
    double t_max = 0.0, window = 0.0;
    for (const auto& p : points) {
        if (!(p.t > 0.0)) throw DomainError("sample_log_field: observation times must be positive");
        t_max = std::max(t_max, p.t);
        window = std::max(window, std::abs(p.x));
    }
    const bool extended = !std::holds_alternative<NarrowWedge>(initial);
    SheSolver solver(cfg, t_max, extended ? window : 0.0);
    if (std::abs(window) > solver.half_width()) throw DomainError("sample_log_field: point outside lattice");

    std::vector<std::size_t> steps;
    for (const auto& p : points) steps.push_back(solver.step_for_time(p.t));
    std::vector<std::size_t> distinct = steps;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    SampleMatrix out;
    out.rows = n;
    out.cols = points.size();
    out.data.assign(n * points.size(), 0.0);
    double edge_sum = 0.0, mass_sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        auto record = [&](std::size_t step, const LatticeField& f) {
            for (std::size_t c = 0; c < points.size(); ++c) {
                if (steps[c] != step) continue;
                const double z = f.at(points[c].x);
                if (!(z > 0.0)) throw NumericalFault("sample_log_field: non-positive value at observation point");
                out(r, c) = std::log(z);
            }
        };
        const LatticeField last = solver.run(initial, T, first + r, distinct, record);
        if (!extended) {
            edge_sum += last.edge_mass(cfg.edge_sites);
            mass_sum += last.mass();
        }
    }
    if (diag) {
        diag->half_width = solver.half_width();
        diag->dt = solver.dt();
        diag->steps = solver.steps();
        diag->edge_mass_fraction = mass_sum > 0.0 ? edge_sum / mass_sum : 0.0;
        diag->boundary_ok = extended || diag->edge_mass_fraction < cfg.boundary_tol;
    }
    return out;
}

/// Replica samples of the centred/scaled height at y (Upsilon for narrow wedge, h^f otherwise)
/// at time 2T. Row r holds replica r.
inline SampleMatrix sample_scaled_heights(const InitialData& initial, double T, const std::vector<double>& y,
                                          std::size_t n, const SolverConfig& cfg, std::uint64_t first = 0,
                                          SimulationDiagnostics* diag = nullptr)
{
    if (!(T > 0.0)) throw DomainError("sample_scaled_heights: T must be positive");
    const auto X = physical_positions(y, T);
    std::vector<SpaceTimePoint> pts;
    for (double x : X) pts.push_back({2.0 * T, x});
    SampleMatrix m = sample_log_field(initial, T, pts, n, cfg, first, diag);
    const HeightKind kind = std::holds_alternative<NarrowWedge>(initial)        ? HeightKind::Upsilon
                            : std::holds_alternative<BrownianTwoSided>(initial) ? HeightKind::BrownianHeight
                                                                                : HeightKind::GeneralHeight;
    for (double& v : m.data) v = scale_center_value(v, T, kind);
    return m;
}

struct ConvolutionResult {
    double value = 0.0;
    double edge_log_weight = kNegInf;  // log of (edge integrand mass / total), a truncation estimate
    bool truncation_warning = false;
};

/// T^{-1/3} log of the trapezoid integral of exp(T^{1/3}(Upsilon(y) + f(-y))) over the
/// Upsilon grid, evaluated in log space. The quadrature nodes are the Upsilon grid merged with
/// the reflected profile nodes; segments touching a -inf value contribute nothing.
inline ConvolutionResult convolve_upsilon_with_f(const ScaledHeightSample& upsilon, const Profile& f, double T,
                                                 double truncation_tol = 1e-8)
{
    if (upsilon.kind != HeightKind::Upsilon) throw DomainError("convolve_upsilon_with_f: sample must be of kind Upsilon");
    if (!(T > 0.0)) throw DomainError("convolve_upsilon_with_f: T must be positive");
    const auto& yg = upsilon.y;
    if (yg.size() < 2 || !strictly_increasing(yg)) throw DomainError("convolve_upsilon_with_f: bad Upsilon grid");
    std::vector<double> nodes(yg.begin(), yg.end());
    for (double v : f.grid()) {
        if (-v > yg.front() && -v < yg.back()) nodes.push_back(-v);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    const double t13 = cube_root(T);
    std::vector<double> g(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double fy = f(-nodes[i]);
        g[i] = fy == kNegInf ? kNegInf : t13 * (interp_linear(yg, upsilon.values, nodes[i]) + fy);
    }
    std::vector<double> terms;
    terms.reserve(2 * nodes.size());
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (g[i] == kNegInf || g[i + 1] == kNegInf) continue;
        const double half = std::log(0.5 * (nodes[i + 1] - nodes[i]));
        terms.push_back(half + g[i]);
        terms.push_back(half + g[i + 1]);
    }
    if (terms.empty()) throw DomainError("convolve_upsilon_with_f: integrand vanishes identically");
    const double log_total = log_sum_exp(terms);

    ConvolutionResult res;
    res.value = log_total / t13;
    const double edge = std::max(g.front(), g.back());
    if (edge != kNegInf) {
        const double span = nodes.back() - nodes.front();
        res.edge_log_weight = edge + std::log(span) - log_total;
        res.truncation_warning = res.edge_log_weight > std::log(truncation_tol);
    }
    return res;
}

struct StationarityReport {
    struct Pair {
        std::size_t i = 0, j = 0;
        stats::KsResult ks;
    };
    std::vector<double> y;
    std::vector<Pair> pairs;
    double min_p_value = 1.0;
};

/// Pairwise two-sample KS tests between the one-point samples of Upsilon_T(y) + y^2/2^{2/3}
/// at each location (`shifted[k]` holds the samples at y[k]).
inline StationarityReport stationarity_report(const std::vector<double>& y,
                                              const std::vector<std::vector<double>>& shifted,
                                              std::size_t min_samples = 1000)
{
    if (y.size() < 2 || y.size() != shifted.size()) throw DomainError("stationarity_report: need >= 2 locations");
    for (const auto& s : shifted) {
        if (s.size() < min_samples) throw DomainError("stationarity_report: insufficient samples");
    }
    StationarityReport rep;
    rep.y = y;
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t j = i + 1; j < y.size(); ++j) {
            StationarityReport::Pair p{i, j, stats::ks_two_sample(shifted[i], shifted[j])};
            rep.min_p_value = std::min(rep.min_p_value, p.ks.p_value);
            rep.pairs.push_back(p);
        }
    }
    return rep;
}

/// Adds y^2/2^{2/3} to column k of a matrix of Upsilon samples at locations y.
inline std::vector<std::vector<double>> parabola_shifted_columns(const SampleMatrix& m, const std::vector<double>& y)
{
    if (m.cols != y.size()) throw DomainError("parabola_shifted_columns: column count mismatch");
    std::vector<std::vector<double>> out;
    for (std::size_t c = 0; c < m.cols; ++c) {
        auto col = m.column(c);
        const double shift = y[c] * y[c] / kTwoTwoThirds;
        for (double& v : col) v += shift;
        out.push_back(std::move(col));
    }
    return out;
}

enum class EventSide { AtMost, Above };

struct FkgEstimate {
    double joint = 0.0;
    double product = 0.0;
    double se = 0.0;  // delta-method standard error of joint - product
    std::vector<double> marginals;
    bool degenerate = false;  // some event has empirical probability 0 or 1
    bool satisfied(double k_se = 3.0) const { return joint >= product - k_se * se; }
};

/// Joint vs product-of-marginals for the events {H_l <= s_l} (AtMost) or {H_l > s_l} (Above),
/// with H_l the columns of `samples` (all columns from shared-noise replicas).
inline FkgEstimate fkg_joint_vs_product(const SampleMatrix& samples, const std::vector<double>& levels, EventSide side)
{
    if (levels.size() != samples.cols || samples.rows == 0) throw DomainError("fkg_joint_vs_product: shape mismatch");
    const std::size_t n = samples.rows, k = samples.cols;
    std::vector<std::vector<char>> ind(k, std::vector<char>(n));
    FkgEstimate est;
    est.marginals.assign(k, 0.0);
    std::vector<char> all(n, 1);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t r = 0; r < n; ++r) {
            const double v = samples(r, c);
            const bool hit = side == EventSide::AtMost ? v <= levels[c] : v > levels[c];
            ind[c][r] = hit;
            all[r] = all[r] && hit;
            est.marginals[c] += hit;
        }
        est.marginals[c] /= static_cast<double>(n);
        if (est.marginals[c] == 0.0 || est.marginals[c] == 1.0) est.degenerate = true;
    }
    double joint = 0.0;
    for (char a : all) joint += a;
    est.joint = joint / static_cast<double>(n);
    est.product = 1.0;
    for (double p : est.marginals) est.product *= p;

    // influence function of joint - prod_l p_l
    std::vector<double> phi(n);
    for (std::size_t r = 0; r < n; ++r) {
        double v = all[r];
        for (std::size_t c = 0; c < k; ++c) {
            double others = 1.0;
            for (std::size_t d = 0; d < k; ++d) {
                if (d != c) others *= est.marginals[d];
            }
            v -= others * ind[c][r];
        }
        phi[r] = v;
    }
    est.se = stats::mean_se(phi).se;
    return est;
}

}  // namespace kpz
