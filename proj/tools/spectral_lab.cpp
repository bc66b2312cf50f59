// spectral_lab: run one experiment from a TOML config and write its CSV.
//
//   spectral_lab --config run.toml [--out result.csv] [--experiment NAME] [--quiet]
//   spectral_lab --validate-only --config run.toml
//   spectral_lab --print-default-config [--experiment NAME]
//
// Exit status: 0 success, 1 invalid config, 2 computation or output error.

#include "spectral_lab/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailed = 2;

int report_diagnostics(const std::vector<std::string>& diags) {
    for (const auto& d : diags)
        std::cerr << "error: " << d << "\n";
    return diags.empty() ? kOk : kInvalid;
}

} // namespace

int main(int argc, char** argv) {
    using namespace spectral_lab;

    CLI::App app{"Kallen-Lehmann spectral measure experiments"};
    app.set_version_flag("--version", std::string(kVersion));
    std::string config_path;
    std::string out_path;
    std::string experiment_name;
    bool quiet = false;
    bool validate_only = false;
    bool print_default = false;
    app.add_option("--config", config_path, "TOML experiment config")->check(CLI::ExistingFile);
    app.add_option("--out", out_path, "CSV output path (default: config 'output', else stdout)");
    app.add_option("--experiment", experiment_name, "experiment to run, overriding the config")
        ->check(CLI::IsMember({"propagator", "scaling-degree", "classify", "schwinger-energy", "confinement",
                               "ft-scaling", "decompose", "sum-rule"}));
    app.add_flag("--quiet", quiet, "no summary or timing on stderr");
    app.add_flag("--validate-only", validate_only, "check the config and exit");
    app.add_flag("--print-default-config", print_default, "print the default config for --experiment and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    // CLI11 has already checked the name
    const bool overridden = !experiment_name.empty();
    const Experiment chosen = overridden ? *parse_experiment(experiment_name) : Experiment::ScalingDegree;

    if (print_default) {
        std::cout << to_toml(default_config(chosen));
        return kOk;
    }

    ConfigLoad load;
    if (config_path.empty()) {
        load.config = default_config(chosen);
    } else {
        try {
            load = load_config(config_path);
        } catch (const IoError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kInvalid;
        } catch (const ParseError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kInvalid;
        }
        if (overridden)
            load.config.experiment = chosen;
    }
    if (!out_path.empty())
        load.config.output = out_path;

    if (const int status = report_diagnostics(validate(load)); status != kOk)
        return status;
    if (validate_only) {
        if (!quiet)
            std::cerr << "config ok: " << to_string(load.config.experiment) << "\n";
        return kOk;
    }

    try {
        const RunRecord rec = run(load.config);
        if (load.config.output.empty())
            std::cout << rec.csv;
        if (!quiet) {
            std::cerr << to_string(load.config.experiment) << ": " << rec.summary << "\n";
            std::cerr << "rows: " << rec.rows << ", config " << rec.config_hash << ", wall time "
                      << rec.wall_seconds << " s\n";
        }
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kOk;
}
