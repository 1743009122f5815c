#ifndef MTOCT_CLI_HPP
#define MTOCT_CLI_HPP

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mtoct/config.hpp"
#include "mtoct/dataio.hpp"
#include "mtoct/engine.hpp"
#include "mtoct/fixture.hpp"
#include "mtoct/stats.hpp"

namespace mtoct {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kConfigEcho = "config.echo";

inline std::vector<RegionData> load_regions(const ExperimentConfig& cfg, std::ostream& log) {
    std::vector<RegionData> out;
    for (const auto& region : cfg.regions) {
        RawSeries s = std::filesystem::is_directory(cfg.data_dir) ? load_directory(cfg.data_dir, region)
                                                                  : load_csv(cfg.data_dir, region);
        log << "loaded " << region << ": " << s.day_count() << " days";
        if (s.dropped_days) log << " (" << s.dropped_days << " incomplete days dropped)";
        log << '\n';
        out.push_back({region, std::move(s)});
    }
    return out;
}

/// Loads data, runs the configured methods and writes result CSVs, the
/// resolved config and a manifest into the output directory.
inline std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    const auto regions = load_regions(cfg, log);
    const auto tasks = make_task_set(cfg.task_set, regions, cfg.n_f, cfg.normalization);

    std::vector<RunResult> results;
    nlohmann::ordered_json timings = nlohmann::ordered_json::object();
    for (Method m : cfg.methods) {
        const auto t0 = std::chrono::steady_clock::now();
        auto r = run_method(tasks, cfg.engine(m));
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        log << method_name(m) << ": " << tasks.size() << " tasks x " << cfg.runs << " runs in " << dt.count() << " s\n";
        results.insert(results.end(), r.begin(), r.end());
    }

    export_results(results, cfg.output_dir);
    {
        std::ofstream echo(cfg.output_dir / kConfigEcho, std::ios::binary);
        echo << render_config(cfg);
    }
    nlohmann::ordered_json manifest;
    manifest["tool"] = "mtoct";
    manifest["version"] = kVersion;
    manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION);
#ifdef __VERSION__
    manifest["compiler"] = __VERSION__;
#endif
    auto& conf = manifest["config"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : to_key_values(cfg)) conf[k] = v;
    manifest["master_seed"] = cfg.master_seed;
    auto& seeds = manifest["run_seeds"] = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < cfg.runs; ++r) seeds.push_back(run_seed(cfg.master_seed, r));
    auto& ds = manifest["datasets"] = nlohmann::ordered_json::array();
    for (const auto& r : regions)
        ds.push_back({{"region", r.region}, {"days", r.series.day_count()}, {"dropped_days", r.series.dropped_days}});
    auto& ts = manifest["tasks"] = nlohmann::ordered_json::array();
    for (const auto& t : tasks)
        ts.push_back({{"task_id", t.task_id},
                      {"state", t.state},
                      {"horizon", t.horizon},
                      {"train", t.samples.split_index},
                      {"test", t.samples.test_size()}});
    manifest["outputs"] = {kRawCsv, kSummaryCsv, kLongCsv, kConfigEcho};
    std::ofstream(cfg.output_dir / kManifest, std::ios::binary) << manifest.dump(2) << '\n';
    return results;
}

inline int cmd_run(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
    try {
        const auto cfg = load_config(config_path);
        const auto results = run_experiment(cfg, out);
        const bool both = cfg.methods.size() == 2;
        if (both) out << format_report(compare(results, "STP", "MTO-CT"));
        out << "results written to " << cfg.output_dir.string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

inline int cmd_fixture(const std::filesystem::path& out_path, std::size_t days, std::uint64_t seed,
                       const std::vector<std::string>& regions, std::ostream& out, std::ostream& err) {
    try {
        FixtureOptions opt;
        opt.days = days;
        opt.seed = seed;
        if (!regions.empty()) opt.regions = regions;
        if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
        write_fixture(out_path, opt);
        out << "wrote " << opt.regions.size() * days * kSlotsPerDay << " rows to " << out_path.string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

inline int cmd_report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
    try {
        if (!std::filesystem::is_directory(dir)) throw std::runtime_error("results directory not found: " + dir.string());
        const auto raw = dir / kRawCsv;
        if (!std::filesystem::exists(raw)) throw std::runtime_error("no " + std::string(kRawCsv) + " in " + dir.string());
        const auto results = read_raw_csv(raw);
        if (results.empty()) throw std::runtime_error(raw.string() + " has no result rows");
        std::vector<std::string> methods;
        for (const auto& r : results)
            if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
        if (methods.size() == 2) {
            const auto rep = compare(results, "STP", "MTO-CT");
            out << rep.tasks.size() << " tasks, " << rep.tasks.front().train.a.size() << " runs per method\n";
            out << format_report(rep);
            return 0;
        }
        if (methods.size() != 1) throw std::runtime_error("unexpected method set in " + raw.string());
        std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_task;
        for (const auto& r : results) {
            by_task[r.task_id].first.push_back(r.train_rmse);
            by_task[r.task_id].second.push_back(r.test_rmse);
        }
        char line[128];
        std::snprintf(line, sizeof line, "%-6s| %-12s| %-12s\n", "Task", "Training", "Testing");
        out << methods.front() << " only\n" << line;
        for (const auto& [id, v] : by_task) {
            std::snprintf(line, sizeof line, "%-6d| %-12.5f| %-12.5f\n", id, mean(v.first), mean(v.second));
            out << line;
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace mtoct

#endif
