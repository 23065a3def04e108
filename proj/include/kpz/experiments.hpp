#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "kpz/common.hpp"
#include "kpz/model.hpp"
#include "kpz/she.hpp"
#include "kpz/statistics.hpp"
#include "kpz/tail_bounds.hpp"

namespace kpz {

enum class TailSide { Lower, Upper };  // P(X <= -s), P(X >= s)

inline std::string side_name(TailSide s) { return s == TailSide::Lower ? "lower" : "upper"; }

struct TailEstimate {
    double s = 0.0;
    TailSide side = TailSide::Lower;
    std::size_t n = 0;
    std::size_t hits = 0;
    double estimate = 0.0;
    double lo = 0.0, hi = 1.0;  // Clopper-Pearson interval at level 1 - alpha
};

inline TailEstimate tail_from_counts(double s, TailSide side, std::size_t hits, std::size_t n, double alpha = 0.01)
{
    TailEstimate t;
    t.s = s;
    t.side = side;
    t.n = n;
    t.hits = hits;
    t.estimate = static_cast<double>(hits) / static_cast<double>(n);
    std::tie(t.lo, t.hi) = stats::clopper_pearson(hits, n, alpha);
    return t;
}

inline TailEstimate mc_tail(std::span<const double> samples, double s, TailSide side, double alpha = 0.01)
{
    if (samples.empty()) throw DomainError("mc_tail: no samples");
    std::size_t hits = 0;
    for (double x : samples) hits += side == TailSide::Lower ? x <= -s : x >= s;
    return tail_from_counts(s, side, hits, samples.size(), alpha);
}

enum class Verdict { Consistent, Violation, Untestable };

inline std::string verdict_name(Verdict v)
{
    switch (v) {
    case Verdict::Consistent: return "CONSISTENT";
    case Verdict::Violation: return "VIOLATION";
    case Verdict::Untestable: return "UNTESTABLE-AT-SCALE";
    }
    return "?";
}

struct VerdictRow {
    Theorem theorem = Theorem::Main1;
    bool upper_statement = true;  // envelope bounds the probability from above
    TailEstimate estimate;
    double T = 1.0;
    double envelope = 1.0;        // raw envelope value
    std::string regime;
    Verdict verdict = Verdict::Consistent;
    double slack = 0.0;           // distance between CI edge and envelope in the safe direction
    std::string note;
};

/// Minimum number of observed hits for a cell to count as within Monte Carlo reach.
inline constexpr std::size_t kMinHits = 10;

/// Verdicts for paired (estimate, query). Upper statements: VIOLATION iff CI-lower > min(envelope, 1).
/// Lower statements: VIOLATION iff CI-upper < envelope. Cells with fewer than kMinHits hits are
/// UNTESTABLE-AT-SCALE.
inline std::vector<VerdictRow> bound_violation_report(const std::vector<TailEstimate>& estimates,
                                                      const std::vector<BoundQuery>& queries)
{
    if (estimates.size() != queries.size()) throw DomainError("bound_violation_report: mismatched pairs");
    std::vector<VerdictRow> rows;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto& e = estimates[i];
        const auto& q = queries[i];
        const bool lower_tail = theorem_is_lower_tail(q.theorem);
        if ((e.side == TailSide::Lower) != lower_tail || e.s != q.s)
            throw DomainError("bound_violation_report: estimate does not match the theorem's tail or s");
        const BoundPair pair = evaluate(q);
        auto make = [&](bool upper, const BoundResult& r) {
            VerdictRow row;
            row.theorem = q.theorem;
            row.upper_statement = upper;
            row.estimate = e;
            row.T = q.T;
            row.envelope = r.value;
            row.regime = regime_name(r.regime);
            row.note = r.validity_note;
            if (e.hits < kMinHits) {
                row.verdict = Verdict::Untestable;
            } else if (upper) {
                row.slack = r.clamped() - e.lo;
                row.verdict = row.slack < 0.0 ? Verdict::Violation : Verdict::Consistent;
            } else {
                row.slack = e.hi - r.value;
                row.verdict = row.slack < 0.0 ? Verdict::Violation : Verdict::Consistent;
            }
            return row;
        };
        rows.push_back(make(true, pair.upper));
        const bool has_lower = q.theorem == Theorem::NW_Lower || q.theorem == Theorem::NW_Upper ||
                               q.theorem == Theorem::Main4 || q.theorem == Theorem::Main6_Br;
        if (has_lower) rows.push_back(make(false, pair.lower));
    }
    return rows;
}

// ---------------------------------------------------------------- output

/// Shortest round-trip decimal for a double (%.17g), with inf spelled as in the profile format.
inline std::string fmt(double v)
{
    if (v == kPosInf) return "inf";
    if (v == kNegInf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path)
    {
        if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
        row(header);
    }

    void row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

inline void write_samples_csv(const std::filesystem::path& path, const SampleMatrix& m,
                              const std::vector<std::string>& columns, std::uint64_t first_replica = 0)
{
    std::vector<std::string> header{"replica"};
    header.insert(header.end(), columns.begin(), columns.end());
    CsvWriter w(path, header);
    for (std::size_t r = 0; r < m.rows; ++r) {
        std::vector<std::string> cells{std::to_string(first_replica + r)};
        for (std::size_t c = 0; c < m.cols; ++c) cells.push_back(fmt(m(r, c)));
        w.row(cells);
    }
}

inline void write_verdicts_csv(const std::filesystem::path& path, const std::vector<VerdictRow>& rows)
{
    CsvWriter w(path, {"theorem", "statement", "side", "s", "T", "n", "hits", "estimate", "ci_lo", "ci_hi",
                       "envelope", "regime", "verdict"});
    for (const auto& r : rows) {
        w.row({theorem_name(r.theorem), r.upper_statement ? "upper" : "lower", side_name(r.estimate.side),
               fmt(r.estimate.s), fmt(r.T), std::to_string(r.estimate.n), std::to_string(r.estimate.hits),
               fmt(r.estimate.estimate), fmt(r.estimate.lo), fmt(r.estimate.hi), fmt(r.envelope), r.regime,
               verdict_name(r.verdict)});
    }
}

inline nlohmann::json to_json(const TailEstimate& t)
{
    return {{"s", t.s}, {"side", side_name(t.side)}, {"n", t.n}, {"hits", t.hits},
            {"estimate", t.estimate}, {"ci", {t.lo, t.hi}}};
}

// ---------------------------------------------------------------- configuration

/// Batch experiment description (JSON keys match the field names).
struct ExperimentConfig {
    std::string name = "custom";
    std::vector<std::string> initial{"narrow_wedge"};  // narrow_wedge | flat | brownian | profile
    std::string profile_csv;                           // for "profile"
    HypParams hyp{1.0, 0.5, 1.0, 1.0, 1.0};
    std::vector<double> T{1.0};
    std::vector<double> y{0.0};
    std::vector<double> s_grid;
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    SolverConfig solver;
    BoundConstants constants{1.0, 1.0, 1.0, 0.0};
    double eps = 0.1, delta = 0.1, mu = 0.1, zeta = 0.1;
    double alpha = 0.01;

    void validate() const
    {
        if (samples == 0) throw ConfigError("samples must be positive");
        if (T.empty()) throw ConfigError("T list is empty");
        for (double t : T) {
            if (!(t > 0.0)) throw ConfigError("T values must be positive");
        }
        if (y.empty()) throw ConfigError("y list is empty");
        for (double s : s_grid) {
            if (!(s > 0.0)) throw ConfigError("s grid values must be positive");
        }
        for (const auto& i : initial) {
            if (i != "narrow_wedge" && i != "flat" && i != "brownian" && i != "profile")
                throw ConfigError("unknown initial data '" + i + "'");
            if (i == "profile" && profile_csv.empty()) throw ConfigError("initial 'profile' needs profile_csv");
        }
        hyp.validate();
        solver.validate();
    }
};

inline ExperimentConfig config_from_json(const nlohmann::json& j)
{
    ExperimentConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("name", c.name);
    get("initial", c.initial);
    get("profile_csv", c.profile_csv);
    get("T", c.T);
    get("y", c.y);
    get("s_grid", c.s_grid);
    get("samples", c.samples);
    get("seed", c.seed);
    get("eps", c.eps);
    get("delta", c.delta);
    get("mu", c.mu);
    get("zeta", c.zeta);
    get("alpha", c.alpha);
    if (j.contains("hyp")) {
        const auto& h = j.at("hyp");
        c.hyp = {h.value("C", c.hyp.C), h.value("nu", c.hyp.nu), h.value("theta", c.hyp.theta),
                 h.value("kappa", c.hyp.kappa), h.value("M", c.hyp.M)};
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        c.solver.dx = s.value("dx", c.solver.dx);
        c.solver.dt = s.value("dt", c.solver.dt);
        c.solver.half_width = s.value("half_width", c.solver.half_width);
        c.solver.boundary_tol = s.value("boundary_tol", c.solver.boundary_tol);
        c.solver.edge_sites = s.value("edge_sites", c.solver.edge_sites);
    }
    if (j.contains("constants")) {
        const auto& k = j.at("constants");
        c.constants = {k.value("K", c.constants.K), k.value("K1", c.constants.K1), k.value("K2", c.constants.K2),
                       k.value("s0", c.constants.s0)};
    }
    c.solver.seed = c.seed;
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        auto c = config_from_json(nlohmann::json::parse(in));
        // profile paths are relative to the config file
        if (!c.profile_csv.empty() && std::filesystem::path(c.profile_csv).is_relative())
            c.profile_csv = (path.parent_path() / c.profile_csv).string();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

inline InitialData make_initial(const std::string& kind, const ExperimentConfig& cfg, std::uint64_t seed)
{
    if (kind == "narrow_wedge") return NarrowWedge{};
    if (kind == "flat") return Flat{};
    if (kind == "brownian") return BrownianTwoSided{seed, 1.0};
    return GeneralScaled{load_profile_csv(cfg.profile_csv), cfg.hyp};
}

/// Theorems whose envelopes apply to each kind of initial data: (lower-tail, upper-tail).
inline std::vector<Theorem> theorems_for(const std::string& kind, TailSide side)
{
    if (kind == "narrow_wedge")
        return side == TailSide::Lower ? std::vector{Theorem::NW_Lower} : std::vector{Theorem::NW_Upper, Theorem::UpTailProp};
    if (kind == "brownian") return side == TailSide::Lower ? std::vector{Theorem::Main3_Br} : std::vector{Theorem::Main6_Br};
    return side == TailSide::Lower ? std::vector{Theorem::Main1} : std::vector{Theorem::Main4};
}

inline BoundQuery make_query(Theorem t, double s, double T, const ExperimentConfig& cfg)
{
    BoundQuery q;
    q.theorem = t;
    q.s = s;
    q.T = T;
    q.eps = cfg.eps;
    q.delta = cfg.delta;
    q.mu = cfg.mu;
    q.zeta = std::min(cfg.zeta, cfg.eps);
    q.constants = cfg.constants;
    return q;
}

struct SimulationOutcome {
    std::vector<VerdictRow> verdicts;
    nlohmann::json summary;
    bool all_consistent = true;  // no gating VIOLATION (upper statements only)
};

/// Simulates every (initial data, T) pair, writes per-replica samples, tail estimates and verdicts.
/// Output is a pure function of the configuration.
inline SimulationOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir)
{
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    SimulationOutcome res;
    res.summary["name"] = cfg.name;
    res.summary["seed"] = cfg.seed;
    nlohmann::json runs = nlohmann::json::array();
    if (cfg.s_grid.empty()) {
        res.summary["runs"] = runs;
        res.summary["note"] = "empty s grid: bounds only, nothing simulated";
        write_json(out_dir / "simulate_summary.json", res.summary);
        return res;
    }
    for (const auto& kind : cfg.initial) {
        for (double T : cfg.T) {
            const InitialData data = make_initial(kind, cfg, cfg.seed);
            SimulationDiagnostics diag;
            const SampleMatrix m = sample_scaled_heights(data, T, cfg.y, cfg.samples, cfg.solver, 0, &diag);
            std::vector<std::string> cols;
            for (double y : cfg.y) cols.push_back("y=" + fmt(y));
            const std::string stem = kind + "_T" + fmt(T);
            write_samples_csv(out_dir / ("samples_" + stem + ".csv"), m, cols);

            nlohmann::json run{{"initial", kind}, {"T", T}, {"n", cfg.samples}, {"half_width", diag.half_width},
                               {"dt", diag.dt}, {"boundary_edge_mass", diag.edge_mass_fraction},
                               {"boundary_ok", diag.boundary_ok}};
            const std::size_t c0 = static_cast<std::size_t>(
                std::find(cfg.y.begin(), cfg.y.end(), 0.0) - cfg.y.begin());
            if (c0 < cfg.y.size()) {
                const auto h0 = m.column(c0);
                std::vector<TailEstimate> est;
                std::vector<BoundQuery> qs;
                for (double s : cfg.s_grid) {
                    for (TailSide side : {TailSide::Lower, TailSide::Upper}) {
                        const auto e = mc_tail(h0, s, side, cfg.alpha);
                        for (Theorem t : theorems_for(kind, side)) {
                            est.push_back(e);
                            qs.push_back(make_query(t, s, T, cfg));
                        }
                    }
                }
                auto rows = bound_violation_report(est, qs);
                write_verdicts_csv(out_dir / ("verdicts_" + stem + ".csv"), rows);
                std::size_t violations = 0, untestable = 0;
                for (const auto& r : rows) {
                    if (r.verdict == Verdict::Violation && r.upper_statement) {
                        ++violations;
                        res.all_consistent = false;
                    }
                    untestable += r.verdict == Verdict::Untestable;
                }
                run["gating_violations"] = violations;
                run["untestable_cells"] = untestable;
                res.verdicts.insert(res.verdicts.end(), rows.begin(), rows.end());
            }
            runs.push_back(run);
        }
    }
    res.summary["runs"] = runs;
    res.summary["all_consistent"] = res.all_consistent;
    write_json(out_dir / "simulate_summary.json", res.summary);
    return res;
}

}  // namespace kpz
