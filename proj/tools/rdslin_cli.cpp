#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rdslin/errors.hpp"
#include "rdslin/harness.hpp"
#include "rdslin/parallel.hpp"
#include "rdslin/scenario.hpp"
#include "rdslin/version.hpp"

namespace {

void print_summary(const rdslin::Report& report, std::ostream& os) {
    os << "status: " << report.value("status", std::string("unknown")) << " (exit " << report.value("exit_code", -1)
       << ")\n";
    if (report.contains("failure")) {
        const auto& f = report.at("failure");
        os << "failure: " << f.value("kind", std::string()) << ": " << f.value("message", std::string()) << "\n";
    }
    if (report.contains("failed_checks") && !report.at("failed_checks").empty()) {
        os << "failed checks: " << report.at("failed_checks").dump() << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random linearization: conjugacy construction and Hoelder certification"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* run = app.add_subcommand("run", "Solve both conjugacies and run every configured check");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory for report.json and CSV tables");

    auto* validate = app.add_subcommand("validate", "Validate hypotheses and estimate constants without solving");
    validate->add_option("--config", config_path, "Experiment config (JSON)")->required();

    auto* components = app.add_subcommand("components", "Run each component of a non-ergodic base independently");
    components->add_option("--config", config_path, "Config holding a \"components\" list")->required();
    components->add_option("--out", out_dir, "Output directory, one subdirectory per component");

    app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : rdslin::exit_code::config;
    }

    try {
        if (app.got_subcommand("version")) {
            std::cout << "rdslin " << rdslin::kVersion << "\n";
            return 0;
        }
        const nlohmann::json doc = rdslin::read_json_file(config_path);
        if (app.got_subcommand("components")) {
            const rdslin::RunOutcome out = rdslin::run_components(doc, out_dir);
            std::cout << out.report.dump(2) << "\n";
            return out.exit_code;
        }
        const rdslin::ExperimentConfig cfg = rdslin::parse_config(doc);
        if (app.got_subcommand("validate")) {
            const rdslin::RunOutcome out = rdslin::validate_experiment(cfg);
            std::cout << out.report.dump(2) << "\n";
            return out.exit_code;
        }
        std::cerr << "workers: " << rdslin::worker_count() << "\n";
        const rdslin::RunOutcome out = rdslin::run_experiment(cfg, out_dir);
        print_summary(out.report, std::cout);
        const std::string dir = out_dir.empty() ? cfg.out : out_dir;
        if (!dir.empty()) {
            std::cout << "report written to " << dir << "/report.json\n";
        }
        return out.exit_code;
    } catch (const rdslin::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return rdslin::exit_code::config;
    } catch (const rdslin::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rdslin::exit_code::config;
    }
}
