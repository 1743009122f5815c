#ifndef MTOCT_FIXTURE_HPP
#define MTOCT_FIXTURE_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtoct/dataio.hpp"

namespace mtoct {

inline const std::vector<std::string>& default_regions() {
    static const std::vector<std::string> regions{"VIC1", "NSW1", "SA1", "QLD1", "TAS1"};
    return regions;
}

struct FixtureOptions {
    std::size_t days = 395;
    std::uint64_t seed = 1;
    std::vector<std::string> regions = default_regions();
    std::chrono::sys_days start = std::chrono::sys_days{std::chrono::year{2020} / 11 / 1};
};

/// Synthetic half-hourly demand in the ingestion format. Regions share a
/// daily profile, a weekly cycle and a day-level AR(1) weather factor, so
/// their series are correlated; each adds its own scale, phase and noise.
inline void write_fixture(const std::filesystem::path& out_path, const FixtureOptions& opt) {
    if (opt.days < 2) throw std::invalid_argument("fixture: days must be >= 2");
    if (opt.regions.empty()) throw std::invalid_argument("fixture: no regions");
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("fixture: cannot write " + out_path.string());

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> weather(opt.days);
    double w = 0.0;
    for (auto& v : weather) v = w = 0.8 * w + 0.6 * normal(rng);

    constexpr double two_pi = 2.0 * std::numbers::pi;
    out << "REGION,SETTLEMENTDATE,TOTALDEMAND\n";
    for (std::size_t r = 0; r < opt.regions.size(); ++r) {
        const double base = 5000.0 - 700.0 * static_cast<double>(r);
        const double phase = 0.02 * static_cast<double>(r);
        const double noise_sd = 0.01 + 0.004 * static_cast<double>(r);
        for (std::size_t d = 0; d < opt.days; ++d) {
            const double weekday = (d % 7 == 5 || d % 7 == 6) ? 0.9 : 1.0;
            const double season = 1.0 + 0.08 * std::cos(two_pi * static_cast<double>(d) / 365.0);
            const double level = base * weekday * season * (1.0 + 0.04 * weather[d]);
            for (std::size_t k = 0; k < kSlotsPerDay; ++k) {
                const double x = static_cast<double>(k) / kSlotsPerDay - phase;
                const double profile = 1.0 - 0.18 * std::cos(two_pi * x) - 0.08 * std::cos(2.0 * two_pi * (x - 0.1));
                const double value = level * profile * (1.0 + noise_sd * normal(rng));
                const Timestamp ts = opt.start + std::chrono::days{d} + std::chrono::minutes{30 * k};
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.2f", value);
                out << opt.regions[r] << ',' << format_timestamp(ts) << ',' << buf << '\n';
            }
        }
    }
    if (!out) throw std::runtime_error("fixture: write failed for " + out_path.string());
}

}  // namespace mtoct

#endif
