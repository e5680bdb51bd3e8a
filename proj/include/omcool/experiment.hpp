#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "omcool/fock.hpp"
#include "omcool/liouvillian.hpp"
#include "omcool/meanfield.hpp"
#include "omcool/params.hpp"
#include "omcool/results.hpp"
#include "omcool/steady.hpp"
#include "omcool/stochastic.hpp"

namespace omcool {

struct SweepSpec {
    std::string variable = "n_b";
    std::vector<double> values;             // explicit grid, or
    std::optional<double> log10_from;       // log-spaced spec
    std::optional<double> log10_to;
    std::optional<int> points;
    // Optional sub-grid for the stochastic method (it is expensive); values
    // must be taken from the main grid.
    std::vector<double> stochastic_values;

    std::vector<double> grid() const {
        if (!values.empty()) return values;
        if (log10_from && log10_to && points) {
            if (*points < 1) throw std::invalid_argument("sweep: points must be >= 1");
            std::vector<double> g;
            for (int k = 0; k < *points; ++k) {
                const double frac = *points == 1 ? 0.0
                                                 : static_cast<double>(k) / (*points - 1);
                g.push_back(std::pow(10.0, *log10_from + frac * (*log10_to - *log10_from)));
            }
            return g;
        }
        throw std::invalid_argument(
            "sweep: need either values[] or {log10_from, log10_to, points}");
    }
};

struct ExperimentConfig {
    SystemParams params;
    std::string method = "meanfield";  // meanfield | stochastic | exact | reduced | compare
    struct {
        double t_end = 0;  // 0: default 10 / gamma
        double dt = 0;     // 0: stochastic::default_dt
        long sample_stride = 100;
    } schedule;
    struct {
        int n_traj = 100;
        std::uint64_t master_seed = 1;
    } ensemble;
    std::optional<SweepSpec> sweep;
    fock::TruncationSpec truncation;
    bool truncation_given = false;
    struct {
        std::string path;
        std::string format = "csv";  // csv | json
        std::string series_path;     // optional time-series companion file
    } output;
};

inline const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> m = {"meanfield", "stochastic", "exact",
                                               "reduced", "compare"};
    return m;
}

namespace detail_config {

inline void reject_unknown(const nlohmann::json& j,
                           const std::vector<std::string>& known,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw std::invalid_argument(where + ": unknown key \"" + it.key() + "\"");
}

}  // namespace detail_config

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    detail_config::reject_unknown(
        j, {"params", "method", "schedule", "ensemble", "sweep", "truncation", "output"},
        "config");
    ExperimentConfig c;
    if (!j.contains("params"))
        throw std::invalid_argument("config: missing required \"params\" block");
    c.params = params_from_json(j.at("params"));

    c.method = j.value("method", c.method);
    if (std::find(known_methods().begin(), known_methods().end(), c.method) ==
        known_methods().end())
        throw std::invalid_argument("config: unknown method \"" + c.method + "\"");

    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        detail_config::reject_unknown(s, {"t_end", "dt", "sample_stride"}, "schedule");
        c.schedule.t_end = s.value("t_end", c.schedule.t_end);
        c.schedule.dt = s.value("dt", c.schedule.dt);
        c.schedule.sample_stride = s.value("sample_stride", c.schedule.sample_stride);
    }
    if (j.contains("ensemble")) {
        const auto& e = j.at("ensemble");
        detail_config::reject_unknown(e, {"n_traj", "master_seed"}, "ensemble");
        c.ensemble.n_traj = e.value("n_traj", c.ensemble.n_traj);
        c.ensemble.master_seed = e.value("master_seed", c.ensemble.master_seed);
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        detail_config::reject_unknown(
            s, {"variable", "values", "log10_from", "log10_to", "points", "stochastic_values"},
            "sweep");
        SweepSpec sp;
        sp.variable = s.value("variable", sp.variable);
        if (sp.variable != "n_b")
            throw std::invalid_argument("sweep: only variable \"n_b\" is supported");
        if (s.contains("values")) sp.values = s.at("values").get<std::vector<double>>();
        if (s.contains("log10_from")) sp.log10_from = s.at("log10_from").get<double>();
        if (s.contains("log10_to")) sp.log10_to = s.at("log10_to").get<double>();
        if (s.contains("points")) sp.points = s.at("points").get<int>();
        if (s.contains("stochastic_values"))
            sp.stochastic_values = s.at("stochastic_values").get<std::vector<double>>();
        for (double v : sp.grid())
            if (!(v >= 0)) throw std::invalid_argument("sweep: grid values must be >= 0");
        c.sweep = std::move(sp);
    }
    if (j.contains("truncation")) {
        const auto& t = j.at("truncation");
        detail_config::reject_unknown(
            t, {"n_a_dim", "n_b_dim", "n_c_dim", "dim_limit"}, "truncation");
        c.truncation.n_a_dim = t.value("n_a_dim", c.truncation.n_a_dim);
        c.truncation.n_b_dim = t.value("n_b_dim", c.truncation.n_b_dim);
        c.truncation.n_c_dim = t.value("n_c_dim", c.truncation.n_c_dim);
        c.truncation.dim_limit = t.value("dim_limit", c.truncation.dim_limit);
        c.truncation_given = true;
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        detail_config::reject_unknown(o, {"path", "format", "series_path"}, "output");
        c.output.path = o.value("path", c.output.path);
        c.output.format = o.value("format", c.output.format);
        c.output.series_path = o.value("series_path", c.output.series_path);
        if (c.output.format != "csv" && c.output.format != "json")
            throw std::invalid_argument("output: format must be csv or json");
    }
    return c;
}

// Serialization is the exact inverse of config_from_json, so a result file's
// embedded config reproduces the run.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["params"] = params_to_json(c.params);
    j["method"] = c.method;
    j["schedule"] = {{"t_end", c.schedule.t_end},
                     {"dt", c.schedule.dt},
                     {"sample_stride", c.schedule.sample_stride}};
    j["ensemble"] = {{"n_traj", c.ensemble.n_traj},
                     {"master_seed", c.ensemble.master_seed}};
    if (c.sweep) {
        nlohmann::json s;
        s["variable"] = c.sweep->variable;
        if (!c.sweep->values.empty()) s["values"] = c.sweep->values;
        if (c.sweep->log10_from) s["log10_from"] = *c.sweep->log10_from;
        if (c.sweep->log10_to) s["log10_to"] = *c.sweep->log10_to;
        if (c.sweep->points) s["points"] = *c.sweep->points;
        if (!c.sweep->stochastic_values.empty())
            s["stochastic_values"] = c.sweep->stochastic_values;
        j["sweep"] = s;
    }
    if (c.truncation_given)
        j["truncation"] = {{"n_a_dim", c.truncation.n_a_dim},
                           {"n_b_dim", c.truncation.n_b_dim},
                           {"n_c_dim", c.truncation.n_c_dim},
                           {"dim_limit", c.truncation.dim_limit}};
    if (!c.output.path.empty() || !c.output.series_path.empty()) {
        nlohmann::json o;
        if (!c.output.path.empty()) o["path"] = c.output.path;
        o["format"] = c.output.format;
        if (!c.output.series_path.empty()) o["series_path"] = c.output.series_path;
        j["output"] = o;
    }
    return j;
}

struct RunOptions {
    int threads = 1;
};

namespace detail_run {

inline double effective_t_of(const SystemParams& p, double n) {
    if (p.omega_c_hz) return effective_temperature(n, *p.omega_c_hz);
    // Dimensionless form: temperature in units of hbar omega_c / k_B.
    return n > 0 ? 1.0 / std::log1p(1.0 / n) : 0.0;
}

inline std::string diag_kv(const std::string& k, double v) {
    return k + "=" + format_double(v);
}

inline stochastic::Schedule schedule_of(const ExperimentConfig& c,
                                        const SystemParams& p) {
    stochastic::Schedule s;
    s.t_end = c.schedule.t_end > 0 ? c.schedule.t_end : 10.0 / p.gamma;
    s.dt = c.schedule.dt;
    s.sample_stride = c.schedule.sample_stride;
    return s;
}

inline fock::TruncationSpec truncation_of(const ExperimentConfig& c,
                                          const SystemParams& p) {
    return c.truncation_given ? c.truncation
                              : fock::default_truncation(p, c.truncation.dim_limit);
}

inline ResultRow meanfield_row(const SystemParams& p) {
    const auto r = meanfield::rates(p);
    const auto ss = meanfield::steady_state(p);
    ResultRow row;
    row.n_b = p.n_b;
    row.method = "meanfield";
    row.n_c_mean = ss.n_c;
    row.n_a_mean = ss.n_a;
    row.effective_t = effective_t_of(p, ss.n_c);
    row.diagnostics = diag_kv("n_c_tilde", r.n_c_tilde) + ";" +
                      std::string("weak_coupling_ok=") +
                      (r.weak_coupling_valid ? "1" : "0");
    return row;
}

inline ResultRow stochastic_row(const SystemParams& p, const ExperimentConfig& c,
                                std::uint64_t seed, const RunOptions& opt) {
    const auto sch = schedule_of(c, p);
    const auto est = stochastic::steady_estimate(p, sch, c.ensemble.n_traj, seed,
                                                 opt.threads);
    ResultRow row;
    row.n_b = p.n_b;
    row.method = "stochastic";
    row.n_c_mean = est.mean;
    row.n_c_stderr = est.std_error;
    row.effective_t = effective_t_of(p, est.mean);
    // n_a is not tracked by the phonon estimator; report NaN-free 0 with note
    row.n_a_mean = 0.0;
    row.diagnostics = diag_kv("n_traj", est.n_traj) + ";" +
                      diag_kv("blowups", est.blowups) + ";" +
                      diag_kv("seed", static_cast<double>(seed)) + ";n_a_mean=unreported";
    return row;
}

inline ResultRow fock_row(const SystemParams& p, const ExperimentConfig& c,
                          bool reduced) {
    const fock::TruncationSpec t = truncation_of(c, p);
    fock::Superoperator l = reduced
        ? fock::liouvillian_reduced(p, t.n_a_dim, t.n_c_dim, t.dim_limit)
        : fock::liouvillian_full(p, t);
    const auto res = fock::steady_state(l);
    ResultRow row;
    row.n_b = p.n_b;
    row.method = reduced ? "reduced" : "exact";
    row.n_c_mean = res.occupation(l.space, "c");
    row.n_a_mean = res.occupation(l.space, "a");
    row.effective_t = effective_t_of(p, row.n_c_mean);
    double max_leak = 0;
    for (double v : res.leakage) max_leak = std::max(max_leak, v);
    row.diagnostics = diag_kv("residual", res.residual) + ";" +
                      diag_kv("trace_error", res.trace_error) + ";" +
                      diag_kv("min_eig", res.min_eigenvalue) + ";" +
                      diag_kv("max_leakage", max_leak) +
                      (max_leak > fock::truncation_leak_warn ? ";leakage_warning=1" : "");
    return row;
}

}  // namespace detail_run

// Runs one parameter point with the configured method (or all three for
// "compare"). A method that fails contributes an explicit failure-marker row
// rather than being silently dropped.
inline std::vector<ResultRow> run_point(const SystemParams& p,
                                        const ExperimentConfig& c,
                                        std::uint64_t seed, const RunOptions& opt,
                                        const std::string& method) {
    using namespace detail_run;
    std::vector<std::string> methods;
    if (method == "compare")
        methods = {"meanfield", "stochastic", "exact"};
    else
        methods = {method};

    std::vector<ResultRow> rows;
    for (const auto& m : methods) {
        try {
            if (m == "meanfield") rows.push_back(meanfield_row(p));
            else if (m == "stochastic") rows.push_back(stochastic_row(p, c, seed, opt));
            else if (m == "exact") rows.push_back(fock_row(p, c, false));
            else if (m == "reduced") rows.push_back(fock_row(p, c, true));
            else throw std::invalid_argument("unknown method " + m);
        } catch (const std::exception& e) {
            ResultRow marker;
            marker.n_b = p.n_b;
            marker.method = m;
            marker.n_c_mean = marker.n_a_mean = marker.effective_t =
                std::numeric_limits<double>::quiet_NaN();
            marker.diagnostics = std::string("error: ") + e.what();
            rows.push_back(marker);
        }
    }
    return rows;
}

struct ExperimentResult {
    std::vector<ResultRow> rows;
    nlohmann::json config;  // exactly what reproduces this run
    bool any_failures = false;
    // series output (stochastic/meanfield single runs only)
    std::vector<double> series_t, series_mean, series_stderr;
};

// Per-sweep-point seeds derive from the master seed and the grid index, so
// a sweep is reproducible point by point.
inline std::uint64_t sweep_point_seed(std::uint64_t master, std::size_t index) {
    return rng::derive_stream_seed(master ^ 0x5357454550ULL, index);
}

inline ExperimentResult run_experiment(const ExperimentConfig& c,
                                       const RunOptions& opt = {}) {
    auto rep = validate(c.params);
    if (!rep.valid())
        throw std::invalid_argument("config: invalid params: " +
                                    rep.issues.front().message);

    ExperimentResult out;
    out.config = config_to_json(c);

    if (c.sweep) {
        const std::vector<double> grid = c.sweep->grid();
        if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
        std::vector<double> sorted = grid;
        std::sort(sorted.begin(), sorted.end());
        const auto& sub = c.sweep->stochastic_values;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            SystemParams p = c.params;
            p.n_b = sorted[i];
            // meanfield covers every point; stochastic is restricted to the
            // sub-grid when one is given. "compare" in a sweep means
            // meanfield + stochastic (the exact solver cannot follow n_b into
            // the large-occupation regime).
            const bool on_sub = sub.empty() ||
                std::find(sub.begin(), sub.end(), sorted[i]) != sub.end();
            std::vector<std::string> methods;
            if (c.method == "meanfield" || c.method == "compare")
                methods.push_back("meanfield");
            if ((c.method == "stochastic" || c.method == "compare") && on_sub)
                methods.push_back("stochastic");
            if (c.method == "exact") methods.push_back("exact");
            if (c.method == "reduced") methods.push_back("reduced");

            for (const auto& m : methods) {
                auto rows = run_point(p, c, sweep_point_seed(c.ensemble.master_seed, i),
                                      opt, m);
                for (auto& r : rows) {
                    if (r.diagnostics.rfind("error:", 0) == 0) out.any_failures = true;
                    out.rows.push_back(std::move(r));
                }
            }
        }
        return out;
    }

    auto rows = run_point(c.params, c, c.ensemble.master_seed, opt, c.method);
    for (auto& r : rows) {
        if (r.diagnostics.rfind("error:", 0) == 0) out.any_failures = true;
        out.rows.push_back(std::move(r));
    }

    // Time series for single stochastic / meanfield runs, if requested.
    if (!c.output.series_path.empty()) {
        if (c.method == "stochastic") {
            const auto sch = detail_run::schedule_of(c, c.params);
            const auto es = stochastic::run_ensemble(c.params, sch, c.ensemble.n_traj,
                                                     c.ensemble.master_seed, opt.threads);
            out.series_t = es.t_grid;
            out.series_mean = es.mean_phonon;
            out.series_stderr = es.std_error;
        } else if (c.method == "meanfield") {
            const auto sch = detail_run::schedule_of(c, c.params);
            std::vector<double> t;
            const double step = sch.t_end / 400.0;
            for (int k = 0; k <= 400; ++k) t.push_back(k * step);
            const auto occ = meanfield::evolve_occupations(
                c.params, {0.0, c.params.n_c}, t);
            out.series_t = t;
            for (const auto& o : occ) out.series_mean.push_back(o.n_c);
            out.series_stderr.assign(t.size(), 0.0);
        }
    }
    return out;
}

}  // namespace omcool
