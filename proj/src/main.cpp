#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rousk/suite.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw rousk::ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation and verification toolkit for reflected diffusions on "
                 "constrained path spaces"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::uint64_t seed_override = 0;
    unsigned workers_override = 0;
    bool have_seed = false, have_workers = false;

    const auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* copt = cmd->add_option("--config", config_path, "experiment config (JSON)");
        if (config_required) copt->required();
        cmd->add_option("--out", out_dir, "output directory for artifacts");
        cmd->add_option("--seed", seed_override, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
        cmd->add_option("--workers", workers_override, "override the config worker count")
            ->each([&](const std::string&) { have_workers = true; });
    };

    auto* run_cmd = app.add_subcommand("run", "run the configured checks");
    add_common(run_cmd, true);
    auto* list_cmd = app.add_subcommand("list", "print the domain catalog and check names");
    auto* calibrate_cmd =
        app.add_subcommand("calibrate-c1", "run the exit-density calibration and store c1");
    add_common(calibrate_cmd, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed()) {
            std::cout << rousk::catalog_text();
            return 0;
        }
        rousk::SuiteOverrides overrides;
        if (have_seed) overrides.seed = seed_override;
        if (have_workers) overrides.workers = workers_override;
        const std::string config_text = read_file(config_path);
        if (calibrate_cmd->parsed())
            return rousk::run_calibration(config_text, out_dir, overrides, std::cout);
        return rousk::run_suite(config_text, out_dir, overrides, std::cout);
    } catch (const rousk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
