#ifndef MTOCT_DATAIO_HPP
#define MTOCT_DATAIO_HPP

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mtoct {

inline constexpr std::size_t kSlotsPerDay = 48;

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Timestamp = std::chrono::sys_time<std::chrono::minutes>;

/// Half-hourly demand for one region, restricted to complete days.
struct RawSeries {
    std::string region_id;
    std::vector<Timestamp> timestamps;
    std::vector<double> values;
    /// Days seen in the input that did not carry exactly 48 readings.
    std::size_t dropped_days = 0;

    std::size_t day_count() const noexcept { return values.size() / kSlotsPerDay; }
};

struct NormalizationStats {
    double min_value = 0.0;
    double max_value = 1.0;

    double range() const noexcept { return max_value - min_value; }
};

enum class NormalizationFit { full, train_only };

struct SampleView {
    Eigen::Ref<const Eigen::MatrixXd> inputs;
    Eigen::Ref<const Eigen::MatrixXd> targets;

    Eigen::Index size() const noexcept { return inputs.rows(); }
};

/// Per-day supervised pairs: row s holds day s's input window and targets.
struct SampleSet {
    Eigen::MatrixXd inputs;   // N x n_f
    Eigen::MatrixXd targets;  // N x horizon
    std::size_t n_f = 0;
    std::size_t horizon = 0;
    std::size_t split_index = 0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.rows()); }
    std::size_t test_size() const noexcept { return size() - split_index; }

    SampleView all() const { return {inputs, targets}; }
    SampleView train() const {
        const auto n = static_cast<Eigen::Index>(split_index);
        return {inputs.topRows(n), targets.topRows(n)};
    }
    SampleView test() const {
        const auto n = static_cast<Eigen::Index>(test_size());
        return {inputs.bottomRows(n), targets.bottomRows(n)};
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

}  // namespace detail

/// Parses `YYYY/MM/DD HH:MM:SS`. Seconds must be zero.
inline bool parse_timestamp(std::string_view s, Timestamp& out) {
    if (s.size() != 19 || s[4] != '/' || s[7] != '/' || s[10] != ' ' || s[13] != ':' || s[16] != ':')
        return false;
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (!detail::parse_int(s.substr(0, 4), y) || !detail::parse_int(s.substr(5, 2), mo) ||
        !detail::parse_int(s.substr(8, 2), d) || !detail::parse_int(s.substr(11, 2), h) ||
        !detail::parse_int(s.substr(14, 2), mi) || !detail::parse_int(s.substr(17, 2), sec))
        return false;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec != 0) return false;
    out = std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi};
    return true;
}

inline std::string format_timestamp(Timestamp t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::year_month_day ymd{day};
    const auto minutes = (t - day).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d/%02u/%02u %02d:%02d:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(minutes / 60), static_cast<int>(minutes % 60));
    return buf;
}

namespace detail {

using Reading = std::pair<Timestamp, double>;

inline void read_region_rows(const std::filesystem::path& path, std::string_view region,
                             std::vector<Reading>& rows) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty data file: " + path.string());

    std::size_t col_region = 0, col_time = 1, col_demand = 2;
    {
        const auto header = split_csv(line);
        auto find = [&](std::initializer_list<std::string_view> names, std::size_t fallback) {
            for (std::size_t i = 0; i < header.size(); ++i)
                for (auto n : names)
                    if (header[i] == n) return i;
            return fallback;
        };
        col_region = find({"REGION", "REGIONID", "region"}, 0);
        col_time = find({"SETTLEMENTDATE", "settlement_date", "timestamp"}, 1);
        col_demand = find({"TOTALDEMAND", "total_demand", "demand"}, 2);
    }
    const std::size_t needed = std::max({col_region, col_time, col_demand}) + 1;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        auto fail = [&](const char* what) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
        };
        if (fields.size() < needed) fail("too few columns");
        if (fields[col_region] != region) continue;
        Reading r;
        if (!parse_timestamp(fields[col_time], r.first)) fail("unparseable timestamp");
        if (!parse_double(fields[col_demand], r.second)) fail("unparseable demand value");
        rows.push_back(r);
    }
}

inline RawSeries assemble_days(std::string region, std::vector<Reading> rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Reading& a, const Reading& b) { return a.first < b.first; });

    RawSeries series;
    series.region_id = std::move(region);
    auto it = rows.begin();
    while (it != rows.end()) {
        const auto day = std::chrono::floor<std::chrono::days>(it->first);
        auto last = std::find_if(it, rows.end(), [&](const Reading& r) {
            return std::chrono::floor<std::chrono::days>(r.first) != day;
        });
        bool complete = (last - it) == static_cast<std::ptrdiff_t>(kSlotsPerDay);
        for (std::size_t k = 0; complete && k < kSlotsPerDay; ++k)
            complete = (it + static_cast<std::ptrdiff_t>(k))->first == day + std::chrono::minutes{30 * k};
        if (complete) {
            for (auto r = it; r != last; ++r) {
                series.timestamps.push_back(r->first);
                series.values.push_back(r->second);
            }
        } else {
            ++series.dropped_days;
        }
        it = last;
    }
    if (series.values.empty())
        throw DataError("no complete days retained for region " + series.region_id + " (" +
                        std::to_string(rows.size()) + " matching rows)");
    return series;
}

}  // namespace detail

/// Reads one region from a demand CSV. Days without exactly 48 half-hour
/// readings are dropped and counted in `dropped_days`.
inline RawSeries load_csv(const std::filesystem::path& path, const std::string& region_id) {
    if (!std::filesystem::is_regular_file(path)) throw DataError("data file not found: " + path.string());
    std::vector<detail::Reading> rows;
    detail::read_region_rows(path, region_id, rows);
    return detail::assemble_days(region_id, std::move(rows));
}

/// Reads one region from every `*.csv` in `dir` (in filename order).
inline RawSeries load_directory(const std::filesystem::path& dir, const std::string& region_id) {
    if (!std::filesystem::is_directory(dir)) throw DataError("data directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .csv files in " + dir.string());
    std::vector<detail::Reading> rows;
    for (const auto& f : files) detail::read_region_rows(f, region_id, rows);
    return detail::assemble_days(region_id, std::move(rows));
}

inline NormalizationStats fit_normalization(std::span<const double> values) {
    if (values.empty()) throw DataError("cannot fit normalization on an empty series");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (!(*hi > *lo)) throw DataError("cannot normalize a constant series");
    return {*lo, *hi};
}

inline NormalizationStats fit_normalization(const RawSeries& series) { return fit_normalization(series.values); }

inline double normalize(double v, const NormalizationStats& stats) {
    return std::clamp((v - stats.min_value) / stats.range(), 0.0, 1.0);
}

inline std::vector<double> normalize(std::span<const double> values, const NormalizationStats& stats) {
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [&](double v) { return normalize(v, stats); });
    return out;
}

inline double denormalize(double v, const NormalizationStats& stats) { return stats.min_value + v * stats.range(); }

/// Training-sample count for N chronologically ordered samples.
inline std::size_t train_split(std::size_t n) {
    const auto k = static_cast<std::size_t>(std::lround(0.8 * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n - 1);
}

/// One sample per day: the first `n_f` values in, the next `horizon` values out.
inline SampleSet build_samples(std::span<const double> normalized, std::size_t n_f, std::size_t horizon) {
    if (n_f == 0 || horizon == 0) throw DataError("window length and horizon must be positive");
    if (n_f + horizon > kSlotsPerDay)
        throw DataError("window length + horizon must not exceed " + std::to_string(kSlotsPerDay));
    if (normalized.size() % kSlotsPerDay != 0) throw DataError("series length is not a whole number of days");
    const std::size_t n = normalized.size() / kSlotsPerDay;
    if (n < 2) throw DataError("at least 2 days are required to build a train/test split");

    SampleSet set;
    set.n_f = n_f;
    set.horizon = horizon;
    set.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_f));
    set.targets.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(horizon));
    for (std::size_t s = 0; s < n; ++s) {
        const double* day = normalized.data() + s * kSlotsPerDay;
        for (std::size_t k = 0; k < n_f; ++k) set.inputs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = day[k];
        for (std::size_t k = 0; k < horizon; ++k)
            set.targets(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = day[n_f + k];
    }
    set.split_index = train_split(n);
    return set;
}

struct PreparedSeries {
    NormalizationStats stats;
    SampleSet samples;
};

/// Normalizes `series` (stats from the full series or from the training days
/// only) and builds its sample set.
inline PreparedSeries prepare_samples(const RawSeries& series, std::size_t n_f, std::size_t horizon,
                                      NormalizationFit fit = NormalizationFit::full) {
    const std::size_t days = series.day_count();
    if (days < 2) throw DataError("at least 2 days are required to build a train/test split");
    std::span<const double> fit_values{series.values};
    if (fit == NormalizationFit::train_only) fit_values = fit_values.first(train_split(days) * kSlotsPerDay);
    PreparedSeries out;
    out.stats = fit_normalization(fit_values);
    const auto normalized = normalize(series.values, out.stats);
    out.samples = build_samples(normalized, n_f, horizon);
    return out;
}

}  // namespace mtoct

#endif
