// oscnet command-line tool for coupled-oscillator experiments.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "oscnet/errors.hpp"
#include "oscnet/experiment.hpp"

namespace {

int report_error(const std::string& kind, const std::string& message, const std::vector<std::string>& violations = {}) {
    nlohmann::ordered_json err;
    err["error"] = kind;
    err["message"] = message;
    if (!violations.empty()) err["violations"] = violations;
    std::cerr << err.dump() << "\n";
    return 1;
}

int cmd_run(const std::string& config_path) {
    const auto check = oscnet::validate_config(config_path);
    if (!check.empty()) return report_error("invalid-config", "config " + config_path + " is invalid", check);
    auto config = oscnet::load_config(config_path);
    oscnet::apply_env_overrides(config);
    const auto report = oscnet::run_experiment(config);
    // Exit report on stdout is the summary itself plus its location.
    nlohmann::ordered_json out;
    out["summary"] = report.summary.string();
    out["seeds"] = report.seeds.size();
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path) {
    const auto violations = oscnet::validate_config(config_path);
    if (violations.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    for (const auto& v : violations) std::cout << v << "\n";
    return 1;
}

int cmd_export(const std::string& record_dir, const std::string& figure, const std::string& out) {
    const auto which = oscnet::parse_figure(figure);
    if (!which) return report_error("parameter", "unknown figure \"" + figure + "\" (fig6, fig7, fig8, phase-circle)");
    oscnet::export_figure_data(record_dir, *which, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic coupled-oscillator experiments"};
    app.require_subcommand(1);

    std::string run_config;
    auto* run = app.add_subcommand("run", "Run every seed of a campaign config");
    run->add_option("config", run_config, "Config file (JSON)")->required();

    std::string validate_config;
    auto* validate = app.add_subcommand("validate", "Check a config without running it");
    validate->add_option("config", validate_config, "Config file (JSON)")->required();

    std::string record_dir;
    std::string figure;
    std::string out_path;
    auto* exp = app.add_subcommand("export", "Write plot-ready CSV from a per-seed record directory");
    exp->add_option("record-dir", record_dir, "Per-seed output directory")->required();
    exp->add_option("--figure", figure, "fig6 | fig7 | fig8 | phase-circle")->required();
    exp->add_option("--out", out_path, "Output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_config);
        if (*validate) return cmd_validate(validate_config);
        if (*exp) return cmd_export(record_dir, figure, out_path);
    } catch (const oscnet::Error& e) {
        return report_error(e.kind(), e.what());
    } catch (const std::exception& e) {
        return report_error("internal", e.what());
    }
    return 1;
}
