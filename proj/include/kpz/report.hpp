#pragma once

#include <chrono>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpz/airy.hpp"
#include "kpz/bridges.hpp"
#include "kpz/experiments.hpp"
#include "kpz/moments.hpp"
#include "kpz/she.hpp"
#include "kpz/tail_bounds.hpp"

namespace kpz {

enum class Status { Pass, Fail, Untestable };

inline std::string status_name(Status s)
{
    switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Untestable: return "UNTESTABLE-AT-SCALE";
    }
    return "?";
}

struct CheckResult {
    int id = 0;
    std::string title;
    Status status = Status::Fail;
    std::string detail;
    double seconds = 0.0;
    nlohmann::json data;
};

/// Sample sizes and budgets for one run of the check suite.
struct Preset {
    std::string name;
    std::size_t nw_samples;          // narrow wedge first-moment runs, T in {0.5, 1}
    std::size_t field_samples;       // stationarity, FKG, convolution profiles (taken from the T = 1 runs)
    std::size_t tail_samples_other;  // flat and Brownian runs
    std::size_t bridge_samples;
    std::size_t gibbs_ks_samples;
    std::size_t dominance_samples;
    std::size_t laplace_samples;     // narrow wedge at T = 2
    std::size_t gue_samples;
    std::size_t gue_N = 512;
    std::size_t gue_K = 10;
    double c1_seconds = 300.0, c3_seconds = 120.0, c7_seconds = 120.0, c11_seconds = 900.0;
};

inline Preset preset_full()
{
    return {"full", 100000, 10000, 10000, 1000000, 10000, 100000, 10000, 10000};
}

inline Preset preset_smoke()
{
    return {"smoke", 1000, 1000, 1000, 50000, 2000, 10000, 500, 1000};
}

inline Preset preset_by_name(const std::string& name)
{
    if (name == "full") return preset_full();
    if (name == "smoke") return preset_smoke();
    throw ConfigError("unknown preset '" + name + "' (expected smoke or full)");
}

struct ReportOptions {
    std::uint64_t seed = 20240601;
    std::set<int> only;              // empty = all criteria
    bool determinism = true;         // criterion 14 (reruns the smoke preset)
    std::function<void(const CheckResult&)> on_check;
};

struct ReportOutcome {
    std::vector<CheckResult> checks;
    nlohmann::json info;

    bool ok() const
    {
        for (const auto& c : checks) {
            if (c.status == Status::Fail) return false;
        }
        return true;
    }
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag)
{
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::string num(double v, int prec = 6)
{
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

using Clock = std::chrono::steady_clock;

inline double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Narrow-wedge runs at T = 1 shared by several criteria.
struct FieldRun {
    std::vector<SpaceTimePoint> points;
    SampleMatrix log_z;                         // replica x point
    std::vector<double> profile_y;              // y grid of the recorded final profiles
    std::vector<std::vector<double>> profiles;  // Upsilon_1(y) for the first field_samples replicas
    SimulationDiagnostics diag;
    double seconds = 0.0;
};

inline FieldRun run_nw_field(std::size_t n, std::size_t profile_n, std::uint64_t seed, double T,
                             const std::vector<SpaceTimePoint>& points, double profile_ymax)
{
    FieldRun fr;
    fr.points = points;
    SolverConfig cfg;
    cfg.seed = seed;
    const auto t0 = Clock::now();
    double t_max = 0.0;
    for (const auto& p : points) t_max = std::max(t_max, p.t);
    SheSolver solver(cfg, t_max);
    std::vector<std::size_t> steps;
    for (const auto& p : points) steps.push_back(solver.step_for_time(p.t));
    std::vector<std::size_t> distinct = steps;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    fr.log_z.rows = n;
    fr.log_z.cols = points.size();
    fr.log_z.data.assign(n * points.size(), 0.0);
    const double xscale = std::pow(2.0 * T, 2.0 / 3.0);
    double edge_sum = 0.0, mass_sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        auto record = [&](std::size_t step, const LatticeField& f) {
            for (std::size_t c = 0; c < points.size(); ++c) {
                if (steps[c] == step) fr.log_z(r, c) = std::log(f.at(points[c].x));
            }
        };
        const LatticeField last = solver.run(NarrowWedge{}, T, r, distinct, record);
        edge_sum += last.edge_mass(cfg.edge_sites);
        mass_sum += last.mass();
        if (r < profile_n) {
            std::vector<double> prof;
            const bool first = fr.profile_y.empty();
            for (std::size_t i = 0; i < last.size(); ++i) {
                const double y = last.x(i) / xscale;
                if (std::abs(y) > profile_ymax) continue;
                if (first) fr.profile_y.push_back(y);
                if (!(last.Z[i] > 0.0)) throw NumericalFault("run_nw_field: non-positive profile value");
                prof.push_back(scale_center_value(std::log(last.Z[i]), T, HeightKind::Upsilon));
            }
            fr.profiles.push_back(std::move(prof));
        }
    }
    fr.diag.half_width = solver.half_width();
    fr.diag.dt = solver.dt();
    fr.diag.steps = solver.steps();
    fr.diag.edge_mass_fraction = mass_sum > 0.0 ? edge_sum / mass_sum : 0.0;
    fr.diag.boundary_ok = fr.diag.edge_mass_fraction < cfg.boundary_tol;
    fr.seconds = since(t0);
    return fr;
}

inline std::vector<double> head(const std::vector<double>& v, std::size_t n)
{
    return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(n, v.size()))};
}

inline const std::vector<double> kTailGrid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};

inline ExperimentConfig bound_check_config()
{
    ExperimentConfig c;
    c.eps = 0.1;
    c.delta = 0.1;
    c.mu = 0.1;
    c.zeta = 0.1;
    c.constants = {1.0, 1.0, 1.0, 0.0};
    return c;
}

}  // namespace detail

/// Runs the numbered acceptance criteria and writes CSV/JSON artefacts into out_dir.
inline ReportOutcome run_report(const Preset& preset, const std::filesystem::path& out_dir, const ReportOptions& opt = {})
{
    using namespace detail;
    std::filesystem::create_directories(out_dir);
    ReportOutcome out;
    auto want = [&](int id) { return opt.only.empty() || opt.only.count(id) > 0; };
    auto emit = [&](CheckResult c) {
        if (opt.on_check) opt.on_check(c);
        out.checks.push_back(std::move(c));
    };
    const std::uint64_t seed = opt.seed;

    // ---------------------------------------------------------------- shared narrow-wedge runs
    const double X_half = std::pow(2.0, 2.0 / 3.0) * 0.5;
    const double X_one = std::pow(2.0, 2.0 / 3.0);
    // columns: (2,0), (2,X(y=0.5)), (2,X(y=1)), (2,0.5), (1,0)
    const std::vector<SpaceTimePoint> pts1{{2.0, 0.0}, {2.0, X_half}, {2.0, X_one}, {2.0, 0.5}, {1.0, 0.0}};
    std::optional<FieldRun> nw1;
    const bool need_nw = want(1) || want(10) || want(12) || want(13);
    if (need_nw) {
        const std::size_t n1 = want(1) || want(13) ? preset.nw_samples : preset.field_samples;
        nw1 = run_nw_field(n1, preset.field_samples, derive_seed(seed, 2), 1.0, pts1, 4.0);
        write_samples_csv(out_dir / "samples_nw_T1.csv", nw1->log_z,
                          {"logZ(2,0)", "logZ(2,X(0.5))", "logZ(2,X(1))", "logZ(2,0.5)", "logZ(1,0)"});
    }

    // ---------------------------------------------------------------- 1
    if (want(1)) {
        CheckResult c{1, "first-moment oracle E Z(2T,0) = 1/(2 sqrt(pi T))"};
        bool ok = true;
        std::string det;
        // the narrow-wedge field does not depend on T: Z(2T, 0) at T = 1/2 is the t = 1 column
        const auto& fr = *nw1;
        for (const auto& [T, column] : {std::pair{0.5, std::size_t{4}}, std::pair{1.0, std::size_t{0}}}) {
            auto col = fr.log_z.column(column);
            for (double& v : col) v = std::exp(v);
            const auto m = stats::mean_se(col);
            const double exact = 1.0 / (2.0 * std::sqrt(kPi * T));
            const double z = (m.mean - exact) / m.se;
            ok = ok && std::abs(z) <= 3.0 && fr.diag.boundary_ok;
            det += "T=" + num(T) + ": mean=" + num(m.mean) + " se=" + num(m.se, 3) + " exact=" + num(exact) +
                   " z=" + num(z, 3) + " edge_mass=" + num(fr.diag.edge_mass_fraction, 3) + "; ";
            c.data["T=" + num(T)] = {{"mean", m.mean}, {"se", m.se}, {"exact", exact}, {"z", z}, {"n", m.n},
                                     {"half_width", fr.diag.half_width}, {"edge_mass", fr.diag.edge_mass_fraction}};
        }
        c.seconds = fr.seconds;
        ok = ok && c.seconds < preset.c1_seconds;
        det += "runtime=" + num(c.seconds, 4) + "s";
        c.status = ok ? Status::Pass : Status::Fail;
        c.detail = det;
        emit(c);
    }

    // ---------------------------------------------------------------- 2
    if (want(2)) {
        const auto t0 = Clock::now();
        CheckResult c{2, "moment_exact(1,T) = e^{T/12}/(2 sqrt(pi T))"};
        double worst = 0.0;
        for (double T : {0.5, 1.0, kPi, 4.0}) {
            const double m = moment_exact(1, T).value, e = std::exp(T / 12.0) / (2.0 * std::sqrt(kPi * T));
            worst = std::max(worst, std::abs(m - e));
            c.data["T=" + num(T)] = {{"moment", m}, {"closed_form", e}};
        }
        c.status = worst <= 1e-8 ? Status::Pass : Status::Fail;
        c.detail = "max |diff| = " + num(worst, 3);
        c.seconds = since(t0);
        emit(c);
    }

    // ---------------------------------------------------------------- 3
    if (want(3)) {
        const auto t0 = Clock::now();
        CheckResult c{3, "psi sandwich psi <= moment <= 69 psi, k in {1,2,3}, T in {4,8}"};
        QuadConfig q;
        q.tolerance = 1e-8;
        bool ok = true;
        CsvWriter w(out_dir / "moments.csv", {"k", "T", "moment", "psi", "69psi", "in_sandwich"});
        std::string det;
        for (double T : {4.0, 8.0}) {
            for (int k : {1, 2, 3}) {
                const auto m = moment_exact(k, T, q);
                const double p = psi(k, T);
                const bool in = m.complete() && m.value >= p * (1.0 - q.tolerance) && m.value <= 69.0 * p;
                ok = ok && in;
                w.row({std::to_string(k), fmt(T), fmt(m.value), fmt(p), fmt(69.0 * p), in ? "1" : "0"});
                det += "k=" + std::to_string(k) + ",T=" + num(T) + ":" + num(m.value / p, 5) + "psi ";
            }
        }
        c.seconds = since(t0);
        ok = ok && c.seconds < preset.c3_seconds;
        c.status = ok ? Status::Pass : Status::Fail;
        c.detail = det;
        emit(c);
    }

    // ---------------------------------------------------------------- 4
    if (want(4)) {
        const auto t0 = Clock::now();
        CheckResult c{4, "partition cubic gap >= (k^2-k)/4, equality only at (k-1,1), k <= 12"};
        bool ok = true;
        std::size_t count = 0;
        for (int k = 1; k <= 12; ++k) {
            for (const auto& lam : enumerate_partitions(k)) {
                if (lam.ell() == 1) continue;
                const auto g = partition_cubic_gap(lam);
                const bool special = lam.ell() == 2 && lam[0] == k - 1 && lam[1] == 1;
                ok = ok && g.meets_bound && (g.is_equality == special);
                ++count;
            }
        }
        c.seconds = since(t0);
        c.status = ok && c.seconds < 1.0 ? Status::Pass : Status::Fail;
        c.detail = std::to_string(count) + " partitions checked";
        emit(c);
    }

    // ---------------------------------------------------------------- 5
    if (want(5)) {
        const auto t0 = Clock::now();
        CheckResult c{5, "Siegel bound <= 68 for k <= 200, maximum at k = 2"};
        bool ok = true;
        int arg = 1;
        double best = 0.0, worst_count = 0.0;
        std::vector<int> failing;
        std::vector<double> count(201, 0.0);  // partition numbers
        count[0] = 1.0;
        for (int part = 1; part <= 200; ++part) {
            for (int k = part; k <= 200; ++k) count[k] += count[k - part];
        }
        for (int k = 1; k <= 200; ++k) {
            const auto s = siegel_check(k);
            if (!s.passes) failing.push_back(k);
            ok = ok && s.passes;
            if (s.value > best) {
                best = s.value;
                arg = k;
            }
            const double kk = k;
            worst_count = std::max(worst_count, std::pow(kk, 1.5) * std::exp(-(kk * kk - kk) / 4.0) * count[k]);
        }
        c.seconds = since(t0);
        c.status = ok && arg == 2 && c.seconds < 1.0 ? Status::Pass : Status::Fail;
        c.detail = "max " + num(best) + " at k=" + std::to_string(arg) + ", exceeds 68 at k in {";
        for (std::size_t i = 0; i < failing.size(); ++i) c.detail += (i ? "," : "") + std::to_string(failing[i]);
        c.detail += "}; with the exact partition count the maximum is " + num(worst_count);
        c.data = {{"max", best}, {"argmax", arg}, {"failing_k", failing}, {"max_with_partition_count", worst_count}};
        emit(c);
    }

    // ---------------------------------------------------------------- 6
    if (want(6)) {
        const auto t0 = Clock::now();
        CheckResult c{6, "Cauchy determinant identity, 100 random instances, ell <= 4"};
        Engine eng = replica_engine(derive_seed(seed, 6), 0);
        double worst = 0.0;
        for (int inst = 0; inst < 100; ++inst) {
            const int k = 1 + static_cast<int>(eng() % 10);
            std::vector<Partition> cands;
            for (auto& p : enumerate_partitions(k)) {
                if (p.ell() <= 4) cands.push_back(p);
            }
            const auto& lam = cands[eng() % cands.size()];
            std::vector<std::complex<double>> w;
            for (int i = 0; i < lam.ell(); ++i) w.emplace_back(0.0, 4.0 * uniform01(eng) - 2.0);
            worst = std::max(worst, cauchy_det_check(lam, w));
        }
        c.seconds = since(t0);
        c.status = worst <= 1e-10 ? Status::Pass : Status::Fail;
        c.detail = "max relative discrepancy " + num(worst, 3);
        emit(c);
    }

    // ---------------------------------------------------------------- 7
    if (want(7)) {
        const auto t0 = Clock::now();
        CheckResult c{7, "bridge minimum tail: MC vs exact, never above e^{-2s^2/L}"};
        const double sets[5][4] = {{0, 0, 1, 1}, {0, 1, 1, 1}, {0.5, -0.5, 2, 0.7}, {0, 0, 1, 0.5}, {1, 0, 3, 1.5}};
        bool ok = true;
        std::string det;
        CsvWriter w(out_dir / "bridge_min_tail.csv", {"x", "y", "L", "s", "exact", "bound", "mc", "se"});
        for (int i = 0; i < 5; ++i) {
            const auto& p = sets[i];
            const auto ex = bridge_min_tail(p[0], p[1], p[2], p[3]);
            const auto mc = bridge_min_tail_mc(p[0], p[1], p[2], p[3], preset.bridge_samples, derive_seed(seed, 70 + i));
            const double z = (mc.mean - ex.exact) / mc.se;
            ok = ok && std::abs(z) <= 3.0 && mc.mean - 3.0 * mc.se <= ex.bound && ex.exact <= ex.bound;
            det += "z=" + num(z, 3) + " ";
            w.row({fmt(p[0]), fmt(p[1]), fmt(p[2]), fmt(p[3]), fmt(ex.exact), fmt(ex.bound), fmt(mc.mean), fmt(mc.se)});
        }
        c.seconds = since(t0);
        ok = ok && c.seconds < preset.c7_seconds;
        c.status = ok ? Status::Pass : Status::Fail;
        c.detail = det + "runtime=" + num(c.seconds, 4) + "s";
        emit(c);
    }

    // ---------------------------------------------------------------- 8
    if (want(8)) {
        const auto t0 = Clock::now();
        CheckResult c{8, "Gibbs resampler with g = -inf equals the free bridge (midpoint KS)"};
        GibbsSpec spec;
        const auto g = gibbs_resample(spec, preset.gibbs_ks_samples, derive_seed(seed, 8));
        Engine eng = replica_engine(derive_seed(seed, 80), 0);
        std::vector<double> free;
        const std::size_t mid = spec.bridge.intervals() / 2;
        for (std::size_t i = 0; i < preset.gibbs_ks_samples; ++i) free.push_back(sample_bridge(spec.bridge, eng)[mid]);
        const auto ks = stats::ks_two_sample(g.midpoints, free);
        c.seconds = since(t0);
        c.status = ks.p_value > 0.01 ? Status::Pass : Status::Fail;
        c.detail = "KS D=" + num(ks.statistic, 4) + " p=" + num(ks.p_value, 4) + " acceptance=" + num(g.stats.acceptance_rate());
        emit(c);
    }

    // ---------------------------------------------------------------- 9
    if (want(9)) {
        const auto t0 = Clock::now();
        CheckResult c{9, "monotone dominance of midpoint marginals, 3 boundary-ordered pairs"};
        BridgeSpec base;
        auto spec = [&](double x, double y, double T, std::optional<double> g) {
            GibbsSpec s;
            s.bridge = base;
            s.bridge.x = x;
            s.bridge.y = y;
            s.T = T;
            if (g) s.g = GibbsSpec::line(s.bridge, *g, *g);
            return s;
        };
        const std::vector<std::pair<GibbsSpec, GibbsSpec>> pairs{
            {spec(1.0, 1.0, 1.0, std::nullopt), spec(0.0, 0.0, 1.0, std::nullopt)},
            {spec(0.0, 0.0, 1.0, 0.5), spec(0.0, 0.0, 1.0, -0.5)},
            {spec(0.0, 0.0, 8.0, -0.5), spec(-0.5, -0.5, 8.0, -1.0)},
        };
        bool ok = true;
        std::string det;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto rep = dominance_test(pairs[i].first, pairs[i].second, preset.dominance_samples, derive_seed(seed, 90 + i));
            ok = ok && rep.dominated;
            det += "pair" + std::to_string(i + 1) + " worst_z=" + num(rep.worst_z, 3) + " ";
        }
        c.seconds = since(t0);
        c.status = ok ? Status::Pass : Status::Fail;
        c.detail = det;
        emit(c);
    }

    // ---------------------------------------------------------------- 10
    if (want(10)) {
        const auto t0 = Clock::now();
        CheckResult c{10, "stationarity of Upsilon_1(y) + y^2/2^{2/3}, y in {0, 0.5, 1}"};
        const std::vector<double> ys{0.0, 0.5, 1.0};
        std::vector<std::vector<double>> shifted;
        for (std::size_t k = 0; k < 3; ++k) {
            auto col = head(nw1->log_z.column(k), preset.field_samples);
            for (double& v : col) v = scale_center_value(v, 1.0, HeightKind::Upsilon) + ys[k] * ys[k] / kTwoTwoThirds;
            shifted.push_back(std::move(col));
        }
        const auto rep = stationarity_report(ys, shifted);
        std::string det;
        for (const auto& p : rep.pairs)
            det += "(" + num(ys[p.i]) + "," + num(ys[p.j]) + ") p=" + num(p.ks.p_value, 4) + " ";
        c.seconds = since(t0);
        c.status = rep.min_p_value > 0.01 ? Status::Pass : Status::Fail;
        c.detail = det;
        emit(c);
    }

    // ---------------------------------------------------------------- 11
    if (want(11)) {
        const auto t0 = Clock::now();
        CheckResult c{11, "Laplace identity E exp(-e^{T^{1/3}(Upsilon-s)}) = E prod I_s(a_k), T = 2"};
        SolverConfig cfg;
        cfg.seed = derive_seed(seed, 11);
        SimulationDiagnostics diag;
        const auto m = sample_scaled_heights(NarrowWedge{}, 2.0, {0.0}, preset.laplace_samples, cfg, 0, &diag);
        write_samples_csv(out_dir / "samples_nw_T2.csv", m, {"Upsilon(0)"});
        const auto ups = m.column(0);
        const auto gue = sample_gue_edges(preset.gue_N, preset.gue_K, preset.gue_samples, derive_seed(seed, 111));
        CsvWriter w(out_dir / "airy_laplace.csv", {"s", "T", "lhs", "rhs", "se_lhs", "se_rhs", "truncation_bound"});
        bool ok = diag.boundary_ok;
        std::string det;
        for (double s : {-1.0, 0.0, 1.0}) {
            const auto l = laplace_lhs(ups, s, 2.0);
            const auto r = laplace_rhs(gue, s, 2.0);
            const double tol = 3.0 * std::sqrt(l.se * l.se + r.se * r.se) + 0.05;
            ok = ok && std::abs(l.mean - r.mean) <= tol;
            w.row({fmt(s), fmt(2.0), fmt(l.mean), fmt(r.mean), fmt(l.se), fmt(r.se), fmt(r.truncation_bound)});
            det += "s=" + num(s) + ": lhs=" + num(l.mean, 4) + " rhs=" + num(r.mean, 4) + " ";
        }
        c.seconds = since(t0);
        ok = ok && c.seconds < preset.c11_seconds;
        c.status = ok ? Status::Pass : Status::Fail;
        c.detail = det + "runtime=" + num(c.seconds, 4) + "s";
        emit(c);
    }

    // ---------------------------------------------------------------- 12
    if (want(12)) {
        const auto t0 = Clock::now();
        CheckResult c{12, "FKG joint >= product - 3 SE at two space-time pairs (both directions)"};
        bool ok = true;
        std::string det;
        const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 3}, {4, 0}};
        const std::vector<std::string> names{"(2,0)&(2,0.5)", "(1,0)&(2,0)"};
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            SampleMatrix sub;
            sub.rows = std::min(preset.field_samples, nw1->log_z.rows);
            sub.cols = 2;
            for (std::size_t r = 0; r < sub.rows; ++r) {
                sub.data.push_back(nw1->log_z(r, pairs[i].first));
                sub.data.push_back(nw1->log_z(r, pairs[i].second));
            }
            const std::vector<double> levels{stats::quantile(sub.column(0), 0.5), stats::quantile(sub.column(1), 0.5)};
            for (EventSide side : {EventSide::AtMost, EventSide::Above}) {
                const auto e = fkg_joint_vs_product(sub, levels, side);
                ok = ok && e.satisfied();
                det += names[i] + (side == EventSide::AtMost ? " <=: " : " >: ") + num(e.joint, 4) + " vs " +
                       num(e.product, 4) + " (se " + num(e.se, 2) + ") ";
            }
        }
        c.seconds = since(t0);
        c.status = ok ? Status::Pass : Status::Fail;
        c.detail = det;
        emit(c);
    }

    // ---------------------------------------------------------------- 13
    if (want(13)) {
        const auto t0 = Clock::now();
        CheckResult c{13, "tail envelopes never contradicted (narrow wedge, flat, Brownian; T = 1)"};
        const auto cfg = bound_check_config();
        std::vector<VerdictRow> rows;
        auto add = [&](const std::string& kind, const std::vector<double>& x) {
            std::vector<TailEstimate> est;
            std::vector<BoundQuery> qs;
            for (double s : kTailGrid) {
                for (TailSide side : {TailSide::Lower, TailSide::Upper}) {
                    const auto e = mc_tail(x, s, side, cfg.alpha);
                    for (Theorem t : theorems_for(kind, side)) {
                        est.push_back(e);
                        qs.push_back(make_query(t, s, 1.0, cfg));
                    }
                }
            }
            auto r = bound_violation_report(est, qs);
            rows.insert(rows.end(), r.begin(), r.end());
        };
        auto ups = nw1->log_z.column(0);
        for (double& v : ups) v = scale_center_value(v, 1.0, HeightKind::Upsilon);
        add("narrow_wedge", ups);

        SolverConfig scfg;
        scfg.seed = derive_seed(seed, 131);
        const auto flat = sample_scaled_heights(Flat{}, 1.0, {0.0}, preset.tail_samples_other, scfg);
        write_samples_csv(out_dir / "samples_flat_T1.csv", flat, {"h(0)"});
        add("flat", flat.column(0));
        scfg.seed = derive_seed(seed, 132);
        const auto br = sample_scaled_heights(BrownianTwoSided{}, 1.0, {0.0}, preset.tail_samples_other, scfg);
        write_samples_csv(out_dir / "samples_brownian_T1.csv", br, {"h(0)"});
        add("brownian", br.column(0));
        write_verdicts_csv(out_dir / "verdicts_T1.csv", rows);

        std::size_t viol = 0, info_viol = 0, untestable = 0, consistent = 0;
        for (const auto& r : rows) {
            if (r.verdict == Verdict::Untestable) ++untestable;
            else if (r.verdict == Verdict::Consistent) ++consistent;
            else if (r.upper_statement) ++viol;
            else ++info_viol;
        }
        c.seconds = since(t0);
        c.status = viol == 0 ? Status::Pass : Status::Fail;
        c.detail = std::to_string(consistent) + " consistent, " + std::to_string(viol) + " upper-envelope violations, " +
                   std::to_string(untestable) + " untestable-at-scale, " + std::to_string(info_viol) +
                   " lower-envelope cells below envelope (informational)";
        c.data = {{"consistent", consistent}, {"violations", viol}, {"untestable", untestable},
                  {"lower_statement_violations", info_viol}};

        // convolution identity: flat h(0) directly vs via Upsilon profiles
        if (!nw1->profiles.empty()) {
            std::vector<double> via;
            const Profile zero = Profile::constant(0.0, nw1->profile_y.front(), nw1->profile_y.back(), 2);
            for (const auto& prof : nw1->profiles) {
                ScaledHeightSample u{1.0, nw1->profile_y, prof, HeightKind::Upsilon};
                via.push_back(convolve_upsilon_with_f(u, zero, 1.0, 1e-3).value);
            }
            const auto ks = stats::ks_two_sample(via, head(flat.column(0), via.size()));
            out.info["scaling_consistency"] = {{"ks_statistic", ks.statistic}, {"p_value", ks.p_value}, {"n", via.size()}};
        }
        emit(c);
    }

    // ---------------------------------------------------------------- bound tables
    {
        CsvWriter w(out_dir / "bounds_table.csv", {"theorem", "s", "T", "eps", "delta", "mu", "zeta", "statement", "value", "regime", "c1", "c2"});
        const auto cfg = bound_check_config();
        for (Theorem t : {Theorem::Main1, Theorem::NW_Lower, Theorem::NW_Upper, Theorem::Main4, Theorem::Main3_Br,
                          Theorem::Main6_Br, Theorem::UpTailProp}) {
            for (double T : {1.0, 4.0, 10.0, 100.0, 1000.0}) {
                for (double s : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
                    const auto q = make_query(t, s, T, cfg);
                    const auto p = evaluate(q);
                    for (const auto* r : {&p.upper, &p.lower}) {
                        w.row({theorem_name(t), fmt(s), fmt(T), fmt(q.eps), fmt(q.delta), fmt(q.mu), fmt(q.zeta),
                               r == &p.upper ? "upper" : "lower", fmt(r->value), regime_name(r->regime),
                               r->c1 ? fmt(*r->c1) : "", r->c2 ? fmt(*r->c2) : ""});
                    }
                }
            }
        }
    }

    // ---------------------------------------------------------------- 14
    if (want(14) && opt.determinism) {
        const auto t0 = Clock::now();
        CheckResult c{14, "determinism: smoke preset rerun gives byte-identical CSVs"};
        ReportOptions sub;
        sub.seed = seed;
        sub.determinism = false;
        const auto a = out_dir / "determinism_a", b = out_dir / "determinism_b";
        std::filesystem::remove_all(a);
        std::filesystem::remove_all(b);
        run_report(preset_smoke(), a, sub);
        run_report(preset_smoke(), b, sub);
        auto slurp = [](const std::filesystem::path& p) {
            std::ifstream in(p, std::ios::binary);
            return std::string(std::istreambuf_iterator<char>(in), {});
        };
        std::size_t files = 0, differing = 0;
        std::set<std::string> names;
        for (const auto& d : {a, b}) {
            for (const auto& e : std::filesystem::directory_iterator(d)) {
                if (e.path().extension() == ".csv") names.insert(e.path().filename().string());
            }
        }
        for (const auto& n : names) {
            ++files;
            if (!std::filesystem::exists(a / n) || !std::filesystem::exists(b / n) || slurp(a / n) != slurp(b / n)) ++differing;
        }
        c.seconds = since(t0);
        c.status = files > 0 && differing == 0 ? Status::Pass : Status::Fail;
        c.detail = std::to_string(files) + " CSV files compared, " + std::to_string(differing) + " differ";
        emit(c);
    }

    // ---------------------------------------------------------------- summary
    nlohmann::json summary;
    summary["preset"] = preset.name;
    summary["seed"] = seed;
    for (const auto& c : out.checks) {
        summary["criteria"][std::to_string(c.id)] = {{"title", c.title}, {"status", status_name(c.status)},
                                                     {"detail", c.detail}, {"seconds", c.seconds}, {"data", c.data}};
    }
    summary["info"] = out.info;
    summary["all_passed"] = out.ok();
    write_json(out_dir / "summary.json", summary);
    return out;
}

}  // namespace kpz
