#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "mtoct/dataio.hpp"
#include "mtoct/fixture.hpp"

using namespace mtoct;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("mtoct_dataio_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// `days` complete days for VIC1 starting 2021/01/01; value = 1000 + 8000 * f(day, slot).
void write_days(const fs::path& path, int days, int short_day = -1) {
    std::ofstream out(path);
    out << "REGION,SETTLEMENTDATE,TOTALDEMAND,RRP,PERIODTYPE\n";
    const auto start = std::chrono::sys_days{std::chrono::year{2021} / 1 / 1};
    for (int d = 0; d < days; ++d)
        for (int k = 0; k < 48; ++k) {
            if (d == short_day && k == 17) continue;
            const Timestamp ts = start + std::chrono::days{d} + std::chrono::minutes{30 * k};
            double v = 1000.0 + 4000.0 * (1.0 + std::sin(0.3 * d + 0.13 * k)) ;
            if (d == 0 && k == 0) v = 1000.0;
            if (d == 1 && k == 5) v = 9000.0;
            v = std::clamp(v, 1000.0, 9000.0);
            out << "VIC1," << format_timestamp(ts) << "," << v << ",50.0,TRADE\n";
        }
}

}  // namespace

TEST(Timestamp, ParseAndFormat) {
    Timestamp t;
    ASSERT_TRUE(parse_timestamp("2020/11/01 00:30:00", t));
    EXPECT_EQ(format_timestamp(t), "2020/11/01 00:30:00");
    EXPECT_FALSE(parse_timestamp("2020-11-01 00:30:00", t));
    EXPECT_FALSE(parse_timestamp("2020/13/01 00:30:00", t));
    EXPECT_FALSE(parse_timestamp("2020/11/01 00:30:15", t));
}

TEST(LoadCsv, CompleteDays) {
    const auto dir = temp_dir("complete");
    write_days(dir / "d.csv", 395);
    const auto s = load_csv(dir / "d.csv", "VIC1");
    EXPECT_EQ(s.values.size(), 395u * 48u);
    EXPECT_EQ(s.day_count(), 395u);
    EXPECT_EQ(s.dropped_days, 0u);
    for (std::size_t i = 1; i < s.timestamps.size(); ++i) ASSERT_LT(s.timestamps[i - 1], s.timestamps[i]);
    const auto stats = fit_normalization(s);
    EXPECT_EQ(stats.min_value, 1000.0);
    EXPECT_EQ(stats.max_value, 9000.0);
}

TEST(LoadCsv, IncompleteDayDropped) {
    const auto dir = temp_dir("short");
    write_days(dir / "d.csv", 10, 4);
    const auto s = load_csv(dir / "d.csv", "VIC1");
    EXPECT_EQ(s.day_count(), 9u);
    EXPECT_EQ(s.dropped_days, 1u);
}

TEST(LoadCsv, UnsortedInputIsSorted) {
    const auto dir = temp_dir("unsorted");
    write_days(dir / "d.csv", 3);
    std::ifstream in(dir / "d.csv");
    std::string header, line;
    std::getline(in, header);
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    std::reverse(rows.begin(), rows.end());
    {
        std::ofstream out(dir / "r.csv");
        out << header << '\n';
        for (auto& r : rows) out << r << '\n';
    }
    const auto a = load_csv(dir / "d.csv", "VIC1");
    const auto b = load_csv(dir / "r.csv", "VIC1");
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.timestamps, b.timestamps);
}

TEST(LoadCsv, Errors) {
    const auto dir = temp_dir("errors");
    EXPECT_THROW(load_csv(dir / "missing.csv", "VIC1"), DataError);
    write_days(dir / "d.csv", 3);
    try {
        load_csv(dir / "d.csv", "NSW1");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("no complete days"), std::string::npos);
    }
    {
        std::ofstream out(dir / "bad.csv");
        out << "REGION,SETTLEMENTDATE,TOTALDEMAND\nVIC1,2021/01/01 00:00:00,12.5\nVIC1,2021/01/01 00:30:00,abc\n";
    }
    try {
        load_csv(dir / "bad.csv", "VIC1");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
}

TEST(LoadDirectory, MergesFiles) {
    const auto dir = temp_dir("merge");
    FixtureOptions opt;
    opt.days = 6;
    opt.regions = {"VIC1", "SA1"};
    write_fixture(dir / "a.csv", opt);
    const auto whole = load_directory(dir, "SA1");
    EXPECT_EQ(whole.day_count(), 6u);
    EXPECT_THROW(load_directory(dir / "nope", "SA1"), DataError);
}

TEST(Normalization, MinMax) {
    const std::vector<double> v{10, 20, 30};
    const auto s = fit_normalization(v);
    EXPECT_EQ(s.min_value, 10);
    EXPECT_EQ(s.max_value, 30);
    EXPECT_EQ(normalize(10.0, s), 0.0);
    EXPECT_EQ(normalize(30.0, s), 1.0);
    EXPECT_EQ(normalize(20.0, s), 0.5);
    EXPECT_EQ(normalize(40.0, s), 1.0);
    EXPECT_EQ(normalize(0.0, s), 0.0);
    const std::vector<double> flat{5, 5};
    EXPECT_THROW(fit_normalization(flat), DataError);
    EXPECT_THROW(fit_normalization(std::vector<double>{}), DataError);
}

TEST(Normalization, RoundTrip) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1000.0, 9000.0);
    const NormalizationStats s{1000.0, 9000.0};
    for (int k = 0; k < 1000; ++k) {
        const double v = u(rng);
        ASSERT_NEAR(denormalize(normalize(v, s), s), v, 1e-12 * 9000.0);
    }
}

TEST(BuildSamples, PaperSplit) {
    std::vector<double> series(395 * 48);
    for (std::size_t i = 0; i < series.size(); ++i) series[i] = static_cast<double>(i % 97) / 96.0;
    const auto set = build_samples(series, 24, 24);
    EXPECT_EQ(set.size(), 395u);
    EXPECT_EQ(set.split_index, 316u);
    EXPECT_EQ(set.test_size(), 79u);
}

TEST(BuildSamples, HandIndexedTargets) {
    std::vector<double> series(10 * 48);
    for (std::size_t i = 0; i < series.size(); ++i) series[i] = static_cast<double>(i) / static_cast<double>(series.size());
    const auto set = build_samples(series, 24, 1);
    EXPECT_EQ(set.size(), 10u);
    EXPECT_EQ(set.split_index, 8u);
    EXPECT_EQ(set.test_size(), 2u);
    for (Eigen::Index d = 0; d < 10; ++d) {
        EXPECT_EQ(set.targets(d, 0), series[static_cast<std::size_t>(d) * 48 + 24]);  // 25th value of the day
        EXPECT_EQ(set.inputs(d, 0), series[static_cast<std::size_t>(d) * 48]);
        EXPECT_EQ(set.inputs(d, 23), series[static_cast<std::size_t>(d) * 48 + 23]);
    }
}

TEST(BuildSamples, SplitIsChronologicalAndExhaustive) {
    std::vector<double> series(40 * 48);
    for (std::size_t i = 0; i < series.size(); ++i) series[i] = static_cast<double>(i / 48) / 40.0;  // day index
    for (std::size_t n_f : {1u, 12u, 24u, 40u})
        for (std::size_t h : {1u, 6u, 8u}) {
            if (n_f + h > 48) continue;
            const auto set = build_samples(series, n_f, h);
            ASSERT_EQ(set.size(), 40u);
            const auto train = set.train();
            const auto test = set.test();
            ASSERT_EQ(static_cast<std::size_t>(train.size() + test.size()), set.size());
            ASSERT_LT(train.inputs.col(0).maxCoeff(), test.inputs.col(0).minCoeff());
        }
}

TEST(BuildSamples, Errors) {
    std::vector<double> one_day(48, 0.5), two_days(96, 0.5);
    EXPECT_THROW(build_samples(one_day, 24, 1), DataError);
    EXPECT_THROW(build_samples(two_days, 24, 25), DataError);
    EXPECT_NO_THROW(build_samples(two_days, 24, 24));
    EXPECT_THROW(build_samples(std::vector<double>(50, 0.5), 24, 1), DataError);
}

TEST(PrepareSamples, TrainOnlyFitUsesTrainingDays) {
    RawSeries s;
    s.region_id = "X";
    for (int d = 0; d < 10; ++d)
        for (int k = 0; k < 48; ++k) s.values.push_back(d < 8 ? 100.0 + k : 1000.0);
    const auto full = prepare_samples(s, 24, 1, NormalizationFit::full);
    const auto train = prepare_samples(s, 24, 1, NormalizationFit::train_only);
    EXPECT_EQ(full.stats.max_value, 1000.0);
    EXPECT_EQ(train.stats.max_value, 147.0);
    EXPECT_EQ(train.samples.test().targets.maxCoeff(), 1.0);  // clamped
    EXPECT_TRUE((full.samples.inputs.array() >= 0).all() && (full.samples.inputs.array() <= 1).all());
}

TEST(Fixture, RowCountDeterminismAndErrors) {
    const auto dir = temp_dir("fixture");
    FixtureOptions opt;
    opt.days = 395;
    opt.seed = 9;
    write_fixture(dir / "a.csv", opt);
    write_fixture(dir / "b.csv", opt);
    std::ifstream a(dir / "a.csv"), b(dir / "b.csv");
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_EQ(sa, sb);
    EXPECT_EQ(std::count(sa.begin(), sa.end(), '\n'), 1 + 5 * 395 * 48);
    for (const auto& r : default_regions()) EXPECT_EQ(load_csv(dir / "a.csv", r).day_count(), 395u);
    opt.days = 1;
    EXPECT_THROW(write_fixture(dir / "c.csv", opt), std::invalid_argument);
}
