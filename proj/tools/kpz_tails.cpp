#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kpz/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "kpz-out";
    std::string preset = "smoke";
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "master seed (overrides the config)");
    app->add_option("--out-dir", c.out_dir, "output directory");
    app->add_option("--preset", c.preset, "sample-size preset")->check(CLI::IsMember({"smoke", "full"}));
}

json read_json(const std::string& path)
{
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw kpz::ConfigError("cannot open config " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw kpz::ConfigError("config " + path + ": " + e.what());
    }
}

template <class T>
T value_or(const json& j, const char* key, T fallback)
{
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

int cmd_simulate(const Common& c)
{
    kpz::ExperimentConfig cfg;
    if (!c.config.empty()) {
        cfg = kpz::load_config(c.config);
    } else {
        cfg.name = c.preset;
        cfg.initial = {"narrow_wedge", "flat", "brownian"};
        cfg.s_grid = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
        cfg.samples = c.preset == "full" ? 10000 : 1000;
    }
    if (c.seed) {
        cfg.seed = *c.seed;
        cfg.solver.seed = *c.seed;
    }
    const auto res = kpz::run_experiment(cfg, c.out_dir);
    std::size_t untestable = 0, violations = 0;
    for (const auto& r : res.verdicts) {
        untestable += r.verdict == kpz::Verdict::Untestable;
        violations += r.verdict == kpz::Verdict::Violation && r.upper_statement;
    }
    bool boundary_ok = true;
    for (const auto& run : res.summary["runs"]) boundary_ok = boundary_ok && run["boundary_ok"].get<bool>();
    std::printf("%zu verdict cells, %zu upper-envelope violations, %zu untestable-at-scale, boundary %s\n",
                res.verdicts.size(), violations, untestable, boundary_ok ? "ok" : "TOO CLOSE");
    return res.all_consistent && boundary_ok ? 0 : 1;
}

int cmd_bounds(const Common& c)
{
    const json j = read_json(c.config);
    kpz::ExperimentConfig cfg = c.config.empty() ? kpz::ExperimentConfig{} : kpz::config_from_json(j);
    auto s_grid = value_or(j, "s_grid", std::vector<double>{0.5, 1.0, 2.0, 4.0, 8.0, 16.0});
    auto T_grid = value_or(j, "T", std::vector<double>{1.0, 4.0, 10.0, 100.0});
    std::vector<kpz::Theorem> theorems{kpz::Theorem::Main1,   kpz::Theorem::NW_Lower, kpz::Theorem::NW_Upper,
                                       kpz::Theorem::Main4,   kpz::Theorem::Main3_Br, kpz::Theorem::Main6_Br,
                                       kpz::Theorem::UpTailProp};
    if (j.contains("theorems")) {
        std::vector<kpz::Theorem> pick;
        for (const auto& name : j.at("theorems").get<std::vector<std::string>>()) {
            bool found = false;
            for (auto t : theorems) {
                if (kpz::theorem_name(t) == name) {
                    pick.push_back(t);
                    found = true;
                }
            }
            if (!found) throw kpz::ConfigError("unknown theorem '" + name + "'");
        }
        theorems = pick;
    }
    fs::create_directories(c.out_dir);
    kpz::CsvWriter w(fs::path(c.out_dir) / "bounds.csv",
                     {"theorem", "s", "T", "eps", "delta", "mu", "zeta", "K", "K1", "K2", "s0", "statement", "value",
                      "regime", "c1", "c2"});
    std::size_t rows = 0;
    for (auto t : theorems) {
        for (double T : T_grid) {
            for (double s : s_grid) {
                const auto q = kpz::make_query(t, s, T, cfg);
                const auto p = kpz::evaluate(q);
                for (const auto* r : {&p.upper, &p.lower}) {
                    w.row({kpz::theorem_name(t), kpz::fmt(s), kpz::fmt(T), kpz::fmt(q.eps), kpz::fmt(q.delta),
                           kpz::fmt(q.mu), kpz::fmt(q.zeta), kpz::fmt(q.constants.K), kpz::fmt(q.constants.K1),
                           kpz::fmt(q.constants.K2), kpz::fmt(q.constants.s0), r == &p.upper ? "upper" : "lower",
                           kpz::fmt(r->value), kpz::regime_name(r->regime), r->c1 ? kpz::fmt(*r->c1) : "",
                           r->c2 ? kpz::fmt(*r->c2) : ""});
                    ++rows;
                }
            }
        }
    }
    std::printf("%zu rows written to %s\n", rows, (fs::path(c.out_dir) / "bounds.csv").c_str());
    return 0;
}

int cmd_moments(const Common& c)
{
    const json j = read_json(c.config);
    const int k_max = value_or(j, "k_max", 3);
    const auto T_grid = value_or(j, "T", std::vector<double>{4.0, 8.0});
    kpz::QuadConfig q;
    q.tolerance = value_or(j, "tolerance", 1e-8);
    fs::create_directories(c.out_dir);
    kpz::CsvWriter w(fs::path(c.out_dir) / "moments.csv",
                     {"k", "T", "moment", "psi", "69psi", "in_sandwich", "abs_error", "skipped_partitions"});
    bool ok = true;
    for (double T : T_grid) {
        for (int k = 1; k <= k_max; ++k) {
            const auto m = kpz::moment_exact(k, T, q);
            const double p = kpz::psi(k, T);
            const bool in = m.value >= p * (1.0 - q.tolerance) && m.value <= 69.0 * p;
            std::string skipped;
            for (const auto& lam : m.skipped) skipped += (skipped.empty() ? "" : " ") + lam.str();
            w.row({std::to_string(k), kpz::fmt(T), kpz::fmt(m.value), kpz::fmt(p), kpz::fmt(69.0 * p), in ? "1" : "0",
                   kpz::fmt(m.abs_error), skipped});
            std::printf("k=%d T=%g moment=%.10g psi=%.10g %s%s\n", k, T, m.value, p, in ? "in sandwich" : "OUTSIDE",
                        m.complete() ? "" : " (incomplete: partitions skipped)");
            ok = ok && (in || !m.complete());
        }
    }
    return ok ? 0 : 1;
}

int cmd_gibbs(const Common& c, const kpz::GibbsSpec& base, const std::string& g_file, std::size_t n)
{
    kpz::GibbsSpec spec = base;
    if (!g_file.empty()) {
        const auto prof = kpz::load_profile_csv(g_file);
        spec.g.clear();
        for (double u : spec.bridge.grid()) spec.g.push_back(prof(u));
    }
    const std::uint64_t seed = c.seed.value_or(1);
    fs::create_directories(c.out_dir);
    kpz::GibbsSample s;
    try {
        s = kpz::gibbs_resample(spec, n, seed, true);
    } catch (const kpz::BoundaryTooConstraining& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    std::vector<std::string> header{"path"};
    for (double u : spec.bridge.grid()) header.push_back("u=" + kpz::fmt(u));
    kpz::CsvWriter w(fs::path(c.out_dir) / "gibbs_paths.csv", header);
    for (std::size_t i = 0; i < s.paths.size(); ++i) {
        std::vector<std::string> row{std::to_string(i)};
        for (double v : s.paths[i]) row.push_back(kpz::fmt(v));
        w.row(row);
    }
    kpz::write_json(fs::path(c.out_dir) / "gibbs_summary.json",
                    {{"a", spec.bridge.a}, {"b", spec.bridge.b}, {"x", spec.bridge.x}, {"y", spec.bridge.y},
                     {"T", spec.T}, {"n", n}, {"seed", seed}, {"proposals", s.stats.proposals},
                     {"accepted", s.stats.accepted}, {"acceptance_rate", s.stats.acceptance_rate()}});
    std::printf("accepted %zu of %zu proposals (rate %.4g)\n", s.stats.accepted, s.stats.proposals,
                s.stats.acceptance_rate());
    return 0;
}

int cmd_airy(const Common& c)
{
    const json j = read_json(c.config);
    const bool full = c.preset == "full";
    const double T = value_or(j, "T", 2.0);
    const auto s_grid = value_or(j, "s_grid", std::vector<double>{-1.0, 0.0, 1.0});
    const auto n_sim = value_or<std::size_t>(j, "samples", full ? 10000 : 500);
    const auto n_gue = value_or<std::size_t>(j, "gue_samples", full ? 10000 : 1000);
    const auto N = value_or<std::size_t>(j, "N", 512);
    const auto K = value_or<std::size_t>(j, "K", 10);
    const std::uint64_t seed = c.seed.value_or(value_or<std::uint64_t>(j, "seed", 1));

    kpz::SolverConfig cfg;
    cfg.seed = seed;
    kpz::SimulationDiagnostics diag;
    const auto m = kpz::sample_scaled_heights(kpz::NarrowWedge{}, T, {0.0}, n_sim, cfg, 0, &diag);
    const auto ups = m.column(0);
    const auto gue = kpz::sample_gue_edges(N, K, n_gue, seed ^ 0xa5a5a5a5ULL);
    fs::create_directories(c.out_dir);
    kpz::CsvWriter w(fs::path(c.out_dir) / "airy.csv", {"s", "T", "lhs", "rhs", "se_lhs", "se_rhs", "truncation_bound"});
    bool ok = diag.boundary_ok;
    for (double s : s_grid) {
        const auto l = kpz::laplace_lhs(ups, s, T);
        const auto r = kpz::laplace_rhs(gue, s, T);
        const bool agree = std::abs(l.mean - r.mean) <= 3.0 * std::sqrt(l.se * l.se + r.se * r.se) + 0.05;
        ok = ok && agree;
        w.row({kpz::fmt(s), kpz::fmt(T), kpz::fmt(l.mean), kpz::fmt(r.mean), kpz::fmt(l.se), kpz::fmt(r.se),
               kpz::fmt(r.truncation_bound)});
        std::printf("s=%g lhs=%.5f rhs=%.5f %s\n", s, l.mean, r.mean, agree ? "agree" : "DISAGREE");
    }
    return ok ? 0 : 1;
}

int cmd_report(const Common& c, const std::vector<int>& only, bool skip_determinism)
{
    kpz::ReportOptions opt;
    if (c.seed) opt.seed = *c.seed;
    opt.only = {only.begin(), only.end()};
    opt.determinism = !skip_determinism;
    opt.on_check = [](const kpz::CheckResult& r) {
        std::printf("[%2d] %-20s %s (%.1fs)\n     %s\n", r.id, kpz::status_name(r.status).c_str(), r.title.c_str(),
                    r.seconds, r.detail.c_str());
        std::fflush(stdout);
    };
    const auto out = kpz::run_report(kpz::preset_by_name(c.preset), c.out_dir, opt);
    return out.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Tail-probability toolkit for the KPZ equation"};
    app.require_subcommand(1);

    Common sim, bnd, mom, gib, air, rep;
    add_common(app.add_subcommand("simulate", "simulate SHE/KPZ samples and compare tails with the envelopes"), sim);
    add_common(app.add_subcommand("bounds", "tabulate the tail envelopes"), bnd);
    add_common(app.add_subcommand("moments", "exact exponential moments against the psi sandwich"), mom);

    auto* g = app.add_subcommand("gibbs", "rejection-sample the single-curve Gibbs law");
    add_common(g, gib);
    kpz::GibbsSpec spec;
    std::string g_file;
    std::size_t g_n = 1000;
    g->add_option("--a", spec.bridge.a, "left end");
    g->add_option("--b", spec.bridge.b, "right end");
    g->add_option("--x", spec.bridge.x, "value at a");
    g->add_option("--y", spec.bridge.y, "value at b");
    g->add_option("--step", spec.bridge.step, "path grid spacing");
    g->add_option("--T", spec.T, "time parameter");
    g->add_option("--g-file", g_file, "CSV (u, g) of the lower curve; -inf outside its range")->check(CLI::ExistingFile);
    g->add_option("--n", g_n, "accepted paths");

    add_common(app.add_subcommand("airy", "Laplace identity between SHE samples and the GUE edge"), air);

    auto* r = app.add_subcommand("report", "run the numbered acceptance checks");
    add_common(r, rep);
    std::vector<int> only;
    bool skip_det = false;
    r->add_option("--only", only, "run only these criterion ids");
    r->add_flag("--skip-determinism", skip_det, "skip the rerun comparison");

    CLI11_PARSE(app, argc, argv);
    try {
        if (app.got_subcommand("simulate")) return cmd_simulate(sim);
        if (app.got_subcommand("bounds")) return cmd_bounds(bnd);
        if (app.got_subcommand("moments")) return cmd_moments(mom);
        if (app.got_subcommand("gibbs")) return cmd_gibbs(gib, spec, g_file, g_n);
        if (app.got_subcommand("airy")) return cmd_airy(air);
        if (app.got_subcommand("report")) return cmd_report(rep, only, skip_det);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
