// omcool command line: run single experiments, n_b sweeps and three-method
// comparisons from a JSON config, plus Kelvin/occupation conversion.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "omcool/experiment.hpp"
#include "omcool/params.hpp"
#include "omcool/results.hpp"

namespace {

omcool::ExperimentConfig load_config(const std::string& path) {
    // A result CSV carries its config in the leading comment line; accept it
    // directly so any output can be regenerated from itself.
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    char first = 0;
    f.get(first);
    f.close();
    nlohmann::json j;
    if (first == '#')
        j = omcool::config_from_result_file(path);
    else {
        std::ifstream g(path);
        j = nlohmann::json::parse(g);
    }
    return omcool::config_from_json(j);
}

int run_command(const std::string& config_path, const std::string& out_override,
                std::optional<std::uint64_t> seed_override,
                const std::string& format_override, int threads,
                const std::string& forced_method) {
    omcool::ExperimentConfig cfg = load_config(config_path);
    if (!forced_method.empty()) cfg.method = forced_method;
    if (seed_override) cfg.ensemble.master_seed = *seed_override;
    if (!out_override.empty()) cfg.output.path = out_override;
    if (!format_override.empty()) {
        if (format_override != "csv" && format_override != "json")
            throw std::invalid_argument("--format must be csv or json");
        cfg.output.format = format_override;
    }
    if (cfg.output.path.empty())
        throw std::invalid_argument("no output path (config output.path or --out)");

    omcool::RunOptions opt;
    opt.threads = threads;
    const omcool::ExperimentResult res = omcool::run_experiment(cfg, opt);

    if (cfg.output.format == "json")
        omcool::write_file(cfg.output.path,
                           omcool::to_json(res.rows, res.config).dump(2) + "\n");
    else
        omcool::write_file(cfg.output.path, omcool::to_csv(res.rows, res.config));
    if (!cfg.output.series_path.empty() && !res.series_t.empty())
        omcool::write_file(cfg.output.series_path,
                           omcool::series_csv(res.series_t, res.series_mean,
                                              res.series_stderr, res.config));

    std::printf("wrote %zu row(s) to %s\n", res.rows.size(), cfg.output.path.c_str());
    for (const auto& r : res.rows)
        std::printf("  n_b=%-12g %-10s n_c=%-14g stderr=%-10g n_a=%-12g T_eff=%g\n",
                    r.n_b, r.method.c_str(), r.n_c_mean, r.n_c_stderr, r.n_a_mean,
                    r.effective_t);
    if (res.any_failures) {
        std::fprintf(stderr, "error: {\"message\":\"one or more grid points failed; "
                             "see failure marker rows\"}\n");
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-mode optomechanical cooling simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path, format;
    std::optional<std::uint64_t> seed;
    int threads = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config (or a result CSV)")
            ->required();
        sub->add_option("--out", out_path, "output file (overrides config)");
        sub->add_option("--seed", seed, "master seed (overrides config)");
        sub->add_option("--threads", threads, "worker threads for trajectory ensembles");
        sub->add_option("--format", format, "csv|json (overrides config)");
    };

    CLI::App* run = app.add_subcommand("run", "run the configured experiment");
    add_common(run);
    CLI::App* sweep = app.add_subcommand("sweep", "run the configured n_b sweep");
    add_common(sweep);
    CLI::App* compare =
        app.add_subcommand("compare", "run all methods at one parameter point");
    add_common(compare);

    CLI::App* conv = app.add_subcommand("convert-temp",
                                        "convert between temperature and occupation");
    std::optional<double> temp_k, occupation;
    double omega_rad_s = 0;
    conv->add_option("--temperature", temp_k, "temperature in K");
    conv->add_option("--occupation", occupation, "mean occupation");
    conv->add_option("--omega", omega_rad_s, "angular frequency in rad/s")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (conv->parsed()) {
            if (temp_k && occupation)
                throw std::invalid_argument("give either --temperature or --occupation");
            if (temp_k) {
                std::printf("%.17g\n", omcool::thermal_occupation(*temp_k, omega_rad_s));
            } else if (occupation) {
                std::printf("%.17g\n",
                            omcool::effective_temperature(*occupation, omega_rad_s));
            } else {
                throw std::invalid_argument("need --temperature or --occupation");
            }
            return 0;
        }
        std::string forced;
        if (compare->parsed()) forced = "compare";
        if (sweep->parsed()) {
            omcool::ExperimentConfig probe = load_config(config_path);
            if (!probe.sweep)
                throw std::invalid_argument("sweep: config has no sweep block");
        }
        return run_command(config_path, out_path, seed, format, threads, forced);
    } catch (const std::exception& e) {
        nlohmann::json err{{"message", e.what()}};
        std::fprintf(stderr, "error: %s\n", err.dump().c_str());
        return 2;
    }
}
