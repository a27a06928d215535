// Command-line front end: run / validate / demo over JSON experiment configs.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lylab/runner.hpp"
#include "lylab/types.hpp"

namespace {

nlohmann::json load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config file: " + path);
    return nlohmann::json::parse(f);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lylab: Lyapunov spectra of linear cocycles over singular hyperbolic flows"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_override;
    int jobs = 0;
    std::uint64_t seed_offset = 0;

    auto* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("--config", config_path, "config file (JSON)")->required();
    run->add_option("--jobs", jobs, "worker count (default: machine parallelism)");
    run->add_option("--output", output_override, "override the config's output_dir");
    run->add_option("--seed-offset", seed_offset, "offset added to every seed");

    auto* validate = app.add_subcommand("validate", "validate a config without executing it");
    validate->add_option("--config", config_path, "config file (JSON)")->required();

    std::string demo_experiment = "flow-spectrum";
    auto* demo = app.add_subcommand("demo", "emit a ready-made config for one experiment");
    demo->add_option("experiment", demo_experiment, "experiment name");

    CLI11_PARSE(app, argc, argv);

    try {
        if (demo->parsed()) {
            std::cout << lylab::demo_config(demo_experiment).dump(2) << '\n';
            return 0;
        }

        nlohmann::json config;
        try {
            config = load_config(config_path);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        }

        if (validate->parsed()) {
            const auto diags = lylab::validate_config(config);
            if (diags.empty()) {
                std::cout << "ok\n";
                return 0;
            }
            for (const auto& d : diags) std::cerr << d << '\n';
            return 2;
        }

        lylab::RunnerOptions opts;
        opts.output_override = output_override;
        opts.jobs = jobs;
        opts.seed_offset = seed_offset;
        const lylab::RunOutcome outcome = lylab::run_config(config, opts);
        for (const auto& d : outcome.diagnostics) std::cerr << d << '\n';
        return outcome.exit_code;
    } catch (const lylab::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
