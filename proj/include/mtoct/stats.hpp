#ifndef MTOCT_STATS_HPP
#define MTOCT_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtoct/engine.hpp"

namespace mtoct {

inline constexpr double kSignificanceLevel = 0.05;

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double p_value = 1.0;    // exact, two-sided
    std::size_t n = 0;       // pairs with a nonzero difference
};

/// Average ranks (1-based) of `values`, ties sharing the mean of their ranks.
inline std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

/// Exact Wilcoxon signed-rank test on paired samples. Zero differences are
/// dropped; the null distribution of W+ is conditioned on the observed
/// (tie-averaged) ranks.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw std::invalid_argument("wilcoxon: samples must be non-empty and paired");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] - y[i] != 0.0) diffs.push_back(x[i] - y[i]);

    WilcoxonResult res;
    res.n = diffs.size();
    if (diffs.empty()) return res;
    if (diffs.size() > 60) throw std::invalid_argument("wilcoxon: exact test limited to 60 nonzero pairs");

    std::vector<double> mags(diffs.size());
    std::transform(diffs.begin(), diffs.end(), mags.begin(), [](double d) { return std::abs(d); });
    const auto ranks = average_ranks(mags);

    // Average ranks are multiples of 1/2, so doubled ranks are exact integers.
    std::vector<std::size_t> twice(ranks.size());
    std::size_t total = 0, w_plus = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        twice[i] = static_cast<std::size_t>(std::lround(2.0 * ranks[i]));
        total += twice[i];
        if (diffs[i] > 0) w_plus += twice[i];
    }
    const std::size_t w = std::min(w_plus, total - w_plus);

    // Subset-sum counts: ways[s] = number of sign patterns with 2 W+ = s.
    std::vector<double> ways(total + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t r : twice)
        for (std::size_t s = total; s >= r; --s) {
            ways[s] += ways[s - r];
            if (s == r) break;
        }
    double tail = 0.0;
    for (std::size_t s = 0; s <= w; ++s) tail += ways[s];
    res.statistic = 0.5 * static_cast<double>(w);
    res.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(twice.size())));
    return res;
}

enum class Verdict { better, same, worse };

inline char verdict_symbol(Verdict v) { return v == Verdict::better ? '+' : v == Verdict::same ? '=' : '-'; }
inline const char* verdict_name(Verdict v) {
    return v == Verdict::better ? "better" : v == Verdict::same ? "same" : "worse";
}

/// Paired comparison of two methods on one metric of one task.
struct MetricComparison {
    std::vector<double> a, b;  // per-run values, run order
    double mean_a = 0.0, mean_b = 0.0;
    double p_value = 1.0;
    Verdict verdict_a = Verdict::same, verdict_b = Verdict::same;
};

struct TaskComparison {
    int task_id = 0;
    std::string state;
    std::size_t horizon = 0;
    MetricComparison train, test;
};

struct Tally {
    std::size_t better = 0, same = 0, worse = 0;
    void add(Verdict v) { ++(v == Verdict::better ? better : v == Verdict::same ? same : worse); }
    std::string str() const {
        return std::to_string(better) + "/" + std::to_string(same) + "/" + std::to_string(worse);
    }
};

struct ComparisonReport {
    std::string method_a, method_b;
    std::vector<TaskComparison> tasks;
    Tally train_a, train_b, test_a, test_b;
};

inline double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean of empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline MetricComparison compare_metric(std::vector<double> a, std::vector<double> b) {
    MetricComparison m;
    m.mean_a = mean(a);
    m.mean_b = mean(b);
    m.p_value = wilcoxon_signed_rank(a, b).p_value;
    if (m.p_value < kSignificanceLevel && m.mean_a != m.mean_b) {
        const bool a_wins = m.mean_a < m.mean_b;
        m.verdict_a = a_wins ? Verdict::better : Verdict::worse;
        m.verdict_b = a_wins ? Verdict::worse : Verdict::better;
    }
    m.a = std::move(a);
    m.b = std::move(b);
    return m;
}

/// Per-task paired comparison of `method_a` against `method_b`, on training
/// and test RMSE separately, with the +/=/- tallies.
inline ComparisonReport compare(const std::vector<RunResult>& results, const std::string& method_a,
                                const std::string& method_b) {
    struct Runs {
        std::string state;
        std::size_t horizon = 0;
        std::map<std::size_t, const RunResult*> a, b;
    };
    std::map<int, Runs> by_task;
    for (const auto& r : results) {
        if (r.method != method_a && r.method != method_b) continue;
        auto& t = by_task[r.task_id];
        t.state = r.state;
        t.horizon = r.horizon;
        auto& slot = (r.method == method_a ? t.a : t.b)[r.run];
        if (slot) throw std::invalid_argument("compare: duplicate result for task " + std::to_string(r.task_id));
        slot = &r;
    }
    if (by_task.empty()) throw std::invalid_argument("compare: no results for " + method_a + " / " + method_b);

    ComparisonReport rep;
    rep.method_a = method_a;
    rep.method_b = method_b;
    for (const auto& [id, t] : by_task) {
        if (t.a.size() != t.b.size() || t.a.empty())
            throw std::invalid_argument("compare: run-count mismatch on task " + std::to_string(id) + " (" +
                                        std::to_string(t.a.size()) + " vs " + std::to_string(t.b.size()) + ")");
        std::vector<double> tr_a, tr_b, te_a, te_b;
        for (auto ia = t.a.begin(), ib = t.b.begin(); ia != t.a.end(); ++ia, ++ib) {
            if (ia->first != ib->first)
                throw std::invalid_argument("compare: run indices differ on task " + std::to_string(id));
            tr_a.push_back(ia->second->train_rmse), te_a.push_back(ia->second->test_rmse);
            tr_b.push_back(ib->second->train_rmse), te_b.push_back(ib->second->test_rmse);
        }
        TaskComparison tc;
        tc.task_id = id;
        tc.state = t.state;
        tc.horizon = t.horizon;
        tc.train = compare_metric(std::move(tr_a), std::move(tr_b));
        tc.test = compare_metric(std::move(te_a), std::move(te_b));
        rep.train_a.add(tc.train.verdict_a), rep.train_b.add(tc.train.verdict_b);
        rep.test_a.add(tc.test.verdict_a), rep.test_b.add(tc.test.verdict_b);
        rep.tasks.push_back(std::move(tc));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// CSV export / import

namespace detail {
inline std::string fmt_real(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(10);
    os << v;
    return os.str();
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}
}  // namespace detail

inline constexpr const char* kRawCsv = "results_raw.csv";
inline constexpr const char* kSummaryCsv = "results_summary.csv";
inline constexpr const char* kLongCsv = "results_long.csv";
inline constexpr const char* kRawHeader = "method,task_id,state,horizon,run,seed,train_rmse,test_rmse";

/// Raw rows are written sorted by (method, task_id, run) so output does not
/// depend on execution order.
inline std::vector<RunResult> sorted_results(std::vector<RunResult> results) {
    std::stable_sort(results.begin(), results.end(), [](const RunResult& a, const RunResult& b) {
        if (a.method != b.method) return a.method == "STP";
        if (a.task_id != b.task_id) return a.task_id < b.task_id;
        return a.run < b.run;
    });
    return results;
}

inline void write_raw_csv(const std::vector<RunResult>& results, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << kRawHeader << '\n';
    for (const auto& r : sorted_results(results))
        out << r.method << ',' << r.task_id << ',' << r.state << ',' << r.horizon << ',' << r.run << ',' << r.seed << ','
            << detail::fmt_real(r.train_rmse) << ',' << detail::fmt_real(r.test_rmse) << '\n';
}

/// One row per (method, task, run, metric); the plotting input.
inline void write_long_csv(const std::vector<RunResult>& results, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "method,task_id,state,horizon,run,metric,value\n";
    for (const auto& r : sorted_results(results)) {
        const auto prefix = r.method + ',' + std::to_string(r.task_id) + ',' + r.state + ',' +
                            std::to_string(r.horizon) + ',' + std::to_string(r.run) + ',';
        out << prefix << "train_rmse," << detail::fmt_real(r.train_rmse) << '\n';
        out << prefix << "test_rmse," << detail::fmt_real(r.test_rmse) << '\n';
    }
}

inline void write_summary_csv(const ComparisonReport& rep, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    const auto& A = rep.method_a;
    const auto& B = rep.method_b;
    out << "task_id,state,horizon,train_mean_" << A << ",train_mean_" << B << ",train_p,train_verdict_" << A
        << ",train_verdict_" << B << ",test_mean_" << A << ",test_mean_" << B << ",test_p,test_verdict_" << A
        << ",test_verdict_" << B << '\n';
    for (const auto& t : rep.tasks)
        out << t.task_id << ',' << t.state << ',' << t.horizon << ',' << detail::fmt_real(t.train.mean_a) << ','
            << detail::fmt_real(t.train.mean_b) << ',' << detail::fmt_real(t.train.p_value) << ','
            << verdict_symbol(t.train.verdict_a) << ',' << verdict_symbol(t.train.verdict_b) << ','
            << detail::fmt_real(t.test.mean_a) << ',' << detail::fmt_real(t.test.mean_b) << ','
            << detail::fmt_real(t.test.p_value) << ',' << verdict_symbol(t.test.verdict_a) << ','
            << verdict_symbol(t.test.verdict_b) << '\n';
    out << "+/=/-,,,,,," << rep.train_a.str() << ',' << rep.train_b.str() << ",,,," << rep.test_a.str() << ','
        << rep.test_b.str() << '\n';
}

/// Per-task means for a single method (no comparison possible).
inline void write_means_csv(const std::vector<RunResult>& results, const std::filesystem::path& path) {
    std::map<std::pair<std::string, int>, std::vector<const RunResult*>> groups;
    for (const auto& r : results) groups[{r.method, r.task_id}].push_back(&r);
    auto out = detail::open_out(path);
    out << "method,task_id,state,horizon,runs,train_mean,test_mean\n";
    for (const auto& [key, rs] : groups) {
        double tr = 0, te = 0;
        for (const auto* r : rs) tr += r->train_rmse, te += r->test_rmse;
        const auto n = static_cast<double>(rs.size());
        out << key.first << ',' << key.second << ',' << rs.front()->state << ',' << rs.front()->horizon << ','
            << rs.size() << ',' << detail::fmt_real(tr / n) << ',' << detail::fmt_real(te / n) << '\n';
    }
}

/// Writes the raw, summary and long-form CSVs into `dir`. The summary
/// compares STP against MTO-CT when both are present.
inline void export_results(const std::vector<RunResult>& results, const std::filesystem::path& dir) {
    if (results.empty()) throw std::invalid_argument("export_results: no results");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
    write_raw_csv(results, dir / kRawCsv);
    write_long_csv(results, dir / kLongCsv);
    const bool has_stp = std::any_of(results.begin(), results.end(), [](auto& r) { return r.method == "STP"; });
    const bool has_mto = std::any_of(results.begin(), results.end(), [](auto& r) { return r.method == "MTO-CT"; });
    if (has_stp && has_mto)
        write_summary_csv(compare(results, "STP", "MTO-CT"), dir / kSummaryCsv);
    else
        write_means_csv(results, dir / kSummaryCsv);
}

/// Reads a raw CSV written by write_raw_csv.
inline std::vector<RunResult> read_raw_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != kRawHeader)
        throw std::runtime_error(path.string() + ": unexpected header");
    std::vector<RunResult> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv(line);
        RunResult r;
        bool ok = f.size() == 8;
        if (ok) {
            r.method = std::string(f[0]);
            r.state = std::string(f[2]);
            ok = detail::parse_int(f[1], r.task_id) && detail::parse_int(f[3], r.horizon) &&
                 detail::parse_int(f[4], r.run) && detail::parse_int(f[5], r.seed) &&
                 detail::parse_double(f[6], r.train_rmse) && detail::parse_double(f[7], r.test_rmse);
        }
        if (!ok) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed row");
        out.push_back(std::move(r));
    }
    return out;
}

/// Tables II/III-style text table; '*' marks a significantly better mean.
inline std::string format_report(const ComparisonReport& rep) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    auto cell = [&](double v, Verdict verdict) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.5f%c", v, verdict == Verdict::better ? '*' : ' ');
        return std::string(buf);
    };
    char line[256];
    std::snprintf(line, sizeof line, "%-6s| %-12s %-12s| %-12s %-12s\n", "", "Training", "RMSE", "Testing", "RMSE");
    os << line;
    std::snprintf(line, sizeof line, "%-6s| %-12s %-12s| %-12s %-12s\n", "Task", rep.method_a.c_str(),
                  rep.method_b.c_str(), rep.method_a.c_str(), rep.method_b.c_str());
    os << line << std::string(58, '-') << '\n';
    for (const auto& t : rep.tasks) {
        std::snprintf(line, sizeof line, "%-6d| %-12s %-12s| %-12s %-12s\n", t.task_id,
                      cell(t.train.mean_a, t.train.verdict_a).c_str(), cell(t.train.mean_b, t.train.verdict_b).c_str(),
                      cell(t.test.mean_a, t.test.verdict_a).c_str(), cell(t.test.mean_b, t.test.verdict_b).c_str());
        os << line;
    }
    os << std::string(58, '-') << '\n';
    std::snprintf(line, sizeof line, "%-6s| %-12s %-12s| %-12s %-12s\n", "+/=/-", rep.train_a.str().c_str(),
                  rep.train_b.str().c_str(), rep.test_a.str().c_str(), rep.test_b.str().c_str());
    os << line << "* significantly better (two-sided exact Wilcoxon signed-rank, p < 0.05)\n";
    return os.str();
}

}  // namespace mtoct

#endif
