#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "robustqm/cli/config.hpp"
#include "robustqm/cli/run.hpp"
#include "robustqm/errors.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

void report(const robustqm::cli::ConfigError& e) {
    std::cerr << "robustqm: invalid config\n";
    for (const auto& d : e.diagnostics()) std::cerr << "  " << robustqm::cli::to_string(d) << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust-inference quantum experiments"};
    app.set_version_flag("--version", robustqm::cli::tool_version);
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;

    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("--config", config_path, "JSON config file")->required();
    run->add_option("--output-dir", output_dir, "Directory for CSV files and manifest.json");

    auto* validate = app.add_subcommand("validate", "Check a config file without running it");
    validate->add_option("--config", config_path, "JSON config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    robustqm::cli::RunConfig config;
    try {
        config = robustqm::cli::load_config(config_path);
    } catch (const robustqm::cli::ConfigError& e) {
        report(e);
        return exit_config;
    }

    if (validate->parsed()) {
        std::cout << "ok: " << config.experiment << "\n";
        return 0;
    }

    try {
        std::optional<std::filesystem::path> dir;
        if (!output_dir.empty()) dir = output_dir;
        const auto manifest = robustqm::cli::run(config, dir);
        for (const auto& f : manifest.output_files) std::cout << f.sha256 << "  " << f.path << "\n";
        return 0;
    } catch (const robustqm::Error& e) {
        std::cerr << "robustqm: " << e.name() << ": " << e.what() << "\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "robustqm: " << e.what() << "\n";
        return exit_numeric;
    }
}
