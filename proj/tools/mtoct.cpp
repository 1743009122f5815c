#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtoct/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Multi-task co-training of LSTM load forecasters"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mtoct::kVersion));

    std::string config;
    auto* run = app.add_subcommand("run", "Run an experiment described by a key=value config file");
    run->add_option("--config", config, "Config file")->required();

    std::string out_path;
    std::size_t days = 0;
    std::uint64_t seed = 1;
    std::vector<std::string> regions;
    auto* fixture = app.add_subcommand("fixture", "Write a synthetic half-hourly demand CSV");
    fixture->add_option("--out", out_path, "Output CSV path")->required();
    fixture->add_option("--days", days, "Number of days")->required();
    fixture->add_option("--seed", seed, "Noise seed")->capture_default_str();
    fixture->add_option("--regions", regions, "Region identifiers")->delimiter(',');

    std::string dir;
    auto* report = app.add_subcommand("report", "Print the comparison table for a results directory");
    report->add_option("--dir", dir, "Results directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (*run) return mtoct::cmd_run(config, std::cout, std::cerr);
    if (*fixture) return mtoct::cmd_fixture(out_path, days, seed, regions, std::cout, std::cerr);
    return mtoct::cmd_report(dir, std::cout, std::cerr);
}
