#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "mtoct/engine.hpp"
#include "mtoct/fixture.hpp"

using namespace mtoct;
namespace fs = std::filesystem;

namespace {

const std::vector<RegionData>& fixture_regions() {
    static const std::vector<RegionData> regions = [] {
        const auto path = fs::temp_directory_path() / "mtoct_engine_fixture.csv";
        FixtureOptions opt;
        opt.days = 30;
        opt.seed = 4;
        write_fixture(path, opt);
        std::vector<RegionData> out;
        for (const auto& r : default_regions()) out.push_back({r, load_csv(path, r)});
        return out;
    }();
    return regions;
}

EngineConfig small_config(Method m, std::size_t iters = 20) {
    EngineConfig c;
    c.method = m;
    c.max_iter = iters;
    c.n_h = 3;
    c.runs = 2;
    c.master_seed = 12345;
    return c;
}

std::vector<TaskSpec> set_a(std::size_t n_f = 8) { return make_task_set('A', fixture_regions(), n_f); }

void expect_same(const std::vector<RunResult>& a, const std::vector<RunResult>& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].task_id, b[i].task_id);
        EXPECT_EQ(a[i].run, b[i].run);
        EXPECT_EQ(a[i].seed, b[i].seed);
        EXPECT_EQ(a[i].train_rmse, b[i].train_rmse);
        EXPECT_EQ(a[i].test_rmse, b[i].test_rmse);
        EXPECT_EQ(a[i].source_successes, b[i].source_successes);
    }
}

}  // namespace

TEST(TaskSet, SetA) {
    const auto tasks = set_a(24);
    ASSERT_EQ(tasks.size(), 5u);
    const std::vector<std::string> states{"VIC1", "NSW1", "SA1", "QLD1", "TAS1"};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(tasks[i].task_id, static_cast<int>(i + 1));
        EXPECT_EQ(tasks[i].horizon, 1u);
        EXPECT_EQ(tasks[i].state, states[i]);
        EXPECT_EQ(tasks[i].samples.horizon, 1u);
        EXPECT_EQ(tasks[i].samples.size(), 30u);
    }
}

TEST(TaskSet, SetBNumbering) {
    const auto tasks = make_task_set('B', fixture_regions(), 24);
    ASSERT_EQ(tasks.size(), 20u);
    EXPECT_EQ(tasks[9].task_id, 10);
    EXPECT_EQ(tasks[9].state, "TAS1");
    EXPECT_EQ(tasks[9].horizon, 12u);
    EXPECT_EQ(tasks[15].task_id, 16);
    EXPECT_EQ(tasks[15].state, "VIC1");
    EXPECT_EQ(tasks[15].horizon, 24u);
    EXPECT_EQ(tasks[0].horizon, 6u);
    EXPECT_EQ(tasks[19].horizon, 24u);
    EXPECT_THROW(make_task_set('C', fixture_regions(), 24), std::invalid_argument);
    EXPECT_THROW(make_task_set('A', {}, 24), std::invalid_argument);
    std::vector<RegionData> missing = fixture_regions();
    missing[2].series.values.clear();
    EXPECT_THROW(make_task_set('A', missing, 24), std::invalid_argument);
}

TEST(Stp, BudgetAndShape) {
    const auto tasks = set_a();
    const auto res = run_stp(tasks, small_config(Method::stp, 40));
    ASSERT_EQ(res.size(), 10u);
    for (const auto& r : res) {
        EXPECT_EQ(r.method, "STP");
        EXPECT_EQ(r.loss_evaluations, 40u);
        EXPECT_GT(r.train_rmse, 0.0);
        EXPECT_GT(r.test_rmse, 0.0);
        EXPECT_TRUE(r.source_ids.empty());
    }
    std::set<std::uint64_t> seeds;
    for (const auto& r : res) seeds.insert(r.seed);
    EXPECT_EQ(seeds.size(), 2u);
}

TEST(Stp, SingleIterationIsOneAdamStep) {
    const auto tasks = set_a();
    auto cfg = small_config(Method::stp, 1);
    cfg.runs = 1;
    const auto res = run_stp(tasks, cfg);

    // Replay by hand for task 3.
    const auto& t = tasks[2];
    const ModelShape shape{t.samples.n_f, cfg.n_h, t.horizon};
    Rng init = make_stream(run_seed(cfg.master_seed, 0), 3, StreamPurpose::init);
    ParamVector p = init_params(shape, init);
    auto adam = adam_init(p.size(), cfg.adam);
    adam_step(adam, p, gradient(p, shape, t.samples.train()));
    EXPECT_EQ(adam.step_count, 1u);
    EXPECT_EQ(res[2].train_rmse, loss_rmse(p, shape, t.samples.train()));
    EXPECT_EQ(res[2].test_rmse, loss_rmse(p, shape, t.samples.test()));
}

TEST(Stp, Deterministic) {
    const auto tasks = set_a();
    expect_same(run_stp(tasks, small_config(Method::stp)), run_stp(tasks, small_config(Method::stp)));
}

TEST(Stp, TrainingReducesLoss) {
    const auto tasks = set_a();
    auto short_cfg = small_config(Method::stp, 1);
    auto long_cfg = small_config(Method::stp, 300);
    const auto a = run_stp(tasks, short_cfg);
    const auto b = run_stp(tasks, long_cfg);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(b[i].train_rmse, a[i].train_rmse);
}

TEST(MtoCt, BudgetParityAndCounters) {
    const auto tasks = set_a();
    const auto res = run_mtoct(tasks, small_config(Method::mtoct, 30));
    ASSERT_EQ(res.size(), 10u);
    for (const auto& r : res) {
        EXPECT_EQ(r.method, "MTO-CT");
        EXPECT_EQ(r.loss_evaluations, 60u);
        ASSERT_EQ(r.source_ids.size(), 4u);
        EXPECT_EQ(std::count(r.source_ids.begin(), r.source_ids.end(), r.task_id), 0);
        std::uint64_t attempts = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_LE(r.source_successes[k], r.source_attempts[k]);
            attempts += r.source_attempts[k];
        }
        EXPECT_EQ(attempts, 3u * 30u);  // n_s sources credited per iteration
    }
}

TEST(MtoCt, GreedyReplacementOnlyOnStrictImprovement) {
    const auto tasks = set_a();
    std::size_t events = 0, replaced = 0;
    run_mtoct(tasks, small_config(Method::mtoct, 25), [&](const TransferEvent& e) {
        ++events;
        EXPECT_LE(e.loss_after, e.loss_before);
        EXPECT_EQ(e.replaced, e.loss_trial < e.loss_before);
        EXPECT_EQ(e.loss_after, e.replaced ? e.loss_trial : e.loss_before);
        replaced += e.replaced;
    });
    EXPECT_EQ(events, 2u * 25u * 5u);
    EXPECT_GT(replaced, 0u);
}

TEST(MtoCt, TaskOrderAscendingWithinIteration) {
    const auto tasks = set_a();
    std::vector<int> order;
    auto cfg = small_config(Method::mtoct, 3);
    cfg.runs = 1;
    run_mtoct(tasks, cfg, [&](const TransferEvent& e) { order.push_back(e.task_id); });
    EXPECT_EQ(order, (std::vector<int>{1, 2, 3, 4, 5, 1, 2, 3, 4, 5, 1, 2, 3, 4, 5}));
}

TEST(MtoCt, Deterministic) {
    const auto tasks = set_a();
    expect_same(run_mtoct(tasks, small_config(Method::mtoct)), run_mtoct(tasks, small_config(Method::mtoct)));
}

TEST(MtoCt, DisabledTransferMatchesStp) {
    const auto tasks = set_a();
    auto cfg = small_config(Method::mtoct, 50);
    cfg.transfer.n_s = 0;
    const auto mto = run_mtoct(tasks, cfg);
    const auto stp = run_stp(tasks, small_config(Method::stp, 50));
    ASSERT_EQ(mto.size(), stp.size());
    for (std::size_t i = 0; i < mto.size(); ++i) {
        EXPECT_EQ(mto[i].train_rmse, stp[i].train_rmse);
        EXPECT_EQ(mto[i].test_rmse, stp[i].test_rmse);
        EXPECT_EQ(mto[i].loss_evaluations, 50u);
    }
}

TEST(MtoCt, SnapshotParallelIndependentOfWorkers) {
    const auto tasks = set_a();
    auto cfg = small_config(Method::mtoct, 20);
    cfg.execution = ExecutionMode::snapshot_parallel;
    cfg.workers = 1;
    const auto one = run_mtoct(tasks, cfg);
    cfg.workers = 2;
    const auto two = run_mtoct(tasks, cfg);
    cfg.workers = 5;
    const auto five = run_mtoct(tasks, cfg);
    cfg.workers = 16;
    const auto many = run_mtoct(tasks, cfg);
    expect_same(one, two);
    expect_same(one, five);
    expect_same(one, many);
    for (const auto& r : one) EXPECT_EQ(r.loss_evaluations, 40u);
}

TEST(MtoCt, TooFewTasks) {
    auto tasks = set_a();
    tasks.resize(3);
    EXPECT_THROW(run_mtoct(tasks, small_config(Method::mtoct)), std::invalid_argument);
}

TEST(Engine, RejectsBadInputs) {
    auto tasks = set_a();
    auto cfg = small_config(Method::stp);
    cfg.max_iter = 0;
    EXPECT_THROW(run_stp(tasks, cfg), std::invalid_argument);
    EXPECT_THROW(run_stp({}, small_config(Method::stp)), std::invalid_argument);
    tasks[1].task_id = 1;
    EXPECT_THROW(run_stp(tasks, small_config(Method::stp)), std::invalid_argument);
}

TEST(Engine, InitDrawsIndependentOfMethod) {
    const auto tasks = set_a();
    auto stp = small_config(Method::stp, 1);
    auto mto = small_config(Method::mtoct, 1);
    mto.transfer.n_s = 0;
    const auto a = run_stp(tasks, stp);
    const auto b = run_mtoct(tasks, mto);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].train_rmse, b[i].train_rmse);
}
