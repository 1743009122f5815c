#ifndef MTOCT_ENGINE_HPP
#define MTOCT_ENGINE_HPP

#include <algorithm>
#include <barrier>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mtoct/adam.hpp"
#include "mtoct/dataio.hpp"
#include "mtoct/lstm.hpp"
#include "mtoct/random.hpp"
#include "mtoct/transfer.hpp"

namespace mtoct {

enum class Method { stp, mtoct };

inline const char* method_name(Method m) { return m == Method::stp ? "STP" : "MTO-CT"; }

inline Method parse_method(const std::string& s) {
    if (s == "STP") return Method::stp;
    if (s == "MTO-CT") return Method::mtoct;
    throw std::invalid_argument("unknown method '" + s + "' (expected STP or MTO-CT)");
}

enum class ExecutionMode { sequential, snapshot_parallel };

struct TaskSpec {
    int task_id = 0;
    std::string state;
    std::size_t horizon = 1;
    SampleSet samples;
};

struct EngineConfig {
    std::size_t max_iter = 20000;
    Method method = Method::stp;
    TransferConfig transfer;  // n_s == 0 disables transfer
    AdamHyper adam;
    std::size_t n_h = 10;
    std::size_t runs = 1;
    std::uint64_t master_seed = 0;
    ExecutionMode execution = ExecutionMode::sequential;
    std::size_t workers = 1;
};

struct RunResult {
    std::string method;
    int task_id = 0;
    std::string state;
    std::size_t horizon = 0;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    double train_rmse = 0.0;
    double test_rmse = 0.0;
    std::uint64_t loss_evaluations = 0;
    std::vector<int> source_ids;                // task ids of the transfer sources
    std::vector<std::uint64_t> source_successes; // aligned with source_ids
    std::vector<std::uint64_t> source_attempts;
};

/// One transfer step of one task, as seen right after the replacement decision.
struct TransferEvent {
    std::size_t run = 0;
    std::size_t iteration = 0;
    int task_id = 0;
    double loss_before = 0.0;
    double loss_trial = 0.0;
    double loss_after = 0.0;
    bool replaced = false;
};

using TransferObserver = std::function<void(const TransferEvent&)>;

/// Table I numbering over `regions` (column order): Set A is one-step ahead
/// per region; Set B stacks 6/12/18/24-step rows.
inline std::vector<int> set_horizons(char set_id) {
    if (set_id == 'A') return {1};
    if (set_id == 'B') return {6, 12, 18, 24};
    throw std::invalid_argument("task set must be A or B");
}

struct RegionData {
    std::string region;
    RawSeries series;
};

inline std::vector<TaskSpec> make_task_set(char set_id, const std::vector<RegionData>& regions, std::size_t n_f,
                                           NormalizationFit fit = NormalizationFit::full) {
    const auto horizons = set_horizons(set_id);
    if (regions.empty()) throw std::invalid_argument("make_task_set: no region data");
    for (const auto& r : regions)
        if (r.series.values.empty()) throw std::invalid_argument("make_task_set: missing data for region " + r.region);

    std::vector<TaskSpec> tasks;
    int id = 1;
    for (int h : horizons)
        for (const auto& r : regions) {
            TaskSpec t;
            t.task_id = id++;
            t.state = r.region;
            t.horizon = static_cast<std::size_t>(h);
            t.samples = prepare_samples(r.series, n_f, t.horizon, fit).samples;
            tasks.push_back(std::move(t));
        }
    return tasks;
}

namespace detail {

struct TaskTrainer {
    const TaskSpec* task = nullptr;
    ModelShape shape;
    ParamVector params;
    AdamState adam;
    TransferState transfer;
    Rng sus_rng;
    Rng cx_rng;
    std::uint64_t loss_evaluations = 0;
};

inline void validate_tasks(const std::vector<TaskSpec>& tasks) {
    if (tasks.empty()) throw std::invalid_argument("engine: empty task set");
    const std::size_t n_f = tasks.front().samples.n_f;
    for (std::size_t a = 0; a < tasks.size(); ++a) {
        const auto& t = tasks[a];
        if (t.samples.horizon != t.horizon)
            throw std::invalid_argument("task " + std::to_string(t.task_id) + ": horizon does not match its samples");
        if (t.samples.n_f != n_f) throw std::invalid_argument("engine: all tasks must share the input window length");
        if (t.samples.split_index == 0 || t.samples.test_size() == 0)
            throw std::invalid_argument("task " + std::to_string(t.task_id) + ": empty train or test split");
        for (std::size_t b = 0; b < a; ++b)
            if (tasks[b].task_id == t.task_id)
                throw std::invalid_argument("engine: duplicate task id " + std::to_string(t.task_id));
    }
}

class CoTraining {
public:
    CoTraining(const std::vector<TaskSpec>& tasks, const EngineConfig& cfg, std::size_t run, const TransferObserver& observer)
        : cfg_(cfg), run_(run), seed_(run_seed(cfg.master_seed, run)), observer_(observer) {
        trainers_.reserve(tasks.size());
        for (std::size_t j = 0; j < tasks.size(); ++j) {
            const auto& t = tasks[j];
            const auto id = static_cast<std::uint64_t>(t.task_id);
            TaskTrainer tr;
            tr.task = &t;
            tr.shape = ModelShape{t.samples.n_f, cfg.n_h, t.horizon};
            Rng init = make_stream(seed_, id, StreamPurpose::init);
            tr.params = init_params(tr.shape, init);
            tr.adam = adam_init(tr.params.size(), cfg.adam);
            tr.transfer = make_transfer_state(j, tasks.size(), cfg.transfer);
            tr.sus_rng = make_stream(seed_, id, StreamPurpose::sus);
            tr.cx_rng = make_stream(seed_, id, StreamPurpose::crossover);
            trainers_.push_back(std::move(tr));
        }
    }

    void run_stp() {
        for (auto& tr : trainers_)
            for (std::size_t it = 0; it < cfg_.max_iter; ++it) gradient_step(tr);
    }

    void run_mtoct() {
        if (cfg_.execution == ExecutionMode::sequential) {
            for (std::size_t it = 0; it < cfg_.max_iter; ++it)
                for (auto& tr : trainers_) cotrain_step(tr, it, [&](std::size_t k) -> const ParamVector& {
                        return trainers_[k].params;
                    });
            return;
        }
        run_snapshot_parallel();
    }

    std::vector<RunResult> results(Method method) const {
        std::vector<RunResult> out;
        for (const auto& tr : trainers_) {
            RunResult r;
            r.method = method_name(method);
            r.task_id = tr.task->task_id;
            r.state = tr.task->state;
            r.horizon = tr.task->horizon;
            r.run = run_;
            r.seed = seed_;
            r.train_rmse = loss_rmse(tr.params, tr.shape, tr.task->samples.train());
            r.test_rmse = loss_rmse(tr.params, tr.shape, tr.task->samples.test());
            r.loss_evaluations = tr.loss_evaluations;
            if (method == Method::mtoct) {
                for (std::size_t k : tr.transfer.sources) r.source_ids.push_back(trainers_[k].task->task_id);
                r.source_successes = tr.transfer.ns;
                r.source_attempts = tr.transfer.na;
            }
            out.push_back(std::move(r));
        }
        return out;
    }

private:
    // One loss evaluation, one gradient, one Adam step.
    void gradient_step(TaskTrainer& tr) {
        auto lg = loss_and_gradient(tr.params, tr.shape, tr.task->samples.train());
        ++tr.loss_evaluations;
        adam_step(tr.adam, tr.params, lg.gradient);
    }

    template <typename Donors>
    void cotrain_step(TaskTrainer& tr, std::size_t iteration, Donors&& donor) {
        if (cfg_.transfer.n_s == 0) {
            gradient_step(tr);
            return;
        }
        const SampleView train = tr.task->samples.train();
        auto lg = loss_and_gradient(tr.params, tr.shape, train);
        ++tr.loss_evaluations;

        update_scores(tr.transfer);
        const auto picks = select_sources(tr.transfer, cfg_.transfer.n_s, tr.sus_rng);
        const ParamVector mutant = mutate(donor(picks[0]), donor(picks[1]), donor(picks[2]), cfg_.transfer.F);
        ParamVector trial = crossover(mutant, tr.params, cfg_.transfer.CR, tr.cx_rng, cfg_.transfer.forced_dimension);
        const double trial_loss = loss_rmse(trial, tr.shape, train);
        ++tr.loss_evaluations;

        const double before = lg.loss;
        const bool replaced = trial_loss < lg.loss;
        if (replaced) {
            tr.params = std::move(trial);
            lg = loss_and_gradient(tr.params, tr.shape, train);
        }
        record_attempt(tr.transfer, picks, replaced);
        if (observer_) {
            const std::lock_guard lock(observer_mutex_);
            observer_({run_, iteration, tr.task->task_id, before, trial_loss, replaced ? trial_loss : before, replaced});
        }
        adam_step(tr.adam, tr.params, lg.gradient);
    }

    // Every task reads donors from the iteration-start snapshot; workers own
    // disjoint task subsets and meet at a barrier after each iteration.
    void run_snapshot_parallel() {
        const std::size_t n = trainers_.size();
        const std::size_t workers = std::clamp<std::size_t>(cfg_.workers, 1, n);
        std::vector<ParamVector> snapshot(n);
        for (std::size_t k = 0; k < n; ++k) snapshot[k] = trainers_[k].params;

        auto refresh = [&]() noexcept {
            for (std::size_t k = 0; k < n; ++k) snapshot[k] = trainers_[k].params;
        };
        std::barrier sync(static_cast<std::ptrdiff_t>(workers), refresh);
        auto work = [&](std::size_t w) {
            for (std::size_t it = 0; it < cfg_.max_iter; ++it) {
                for (std::size_t j = w; j < n; j += workers)
                    cotrain_step(trainers_[j], it, [&](std::size_t k) -> const ParamVector& { return snapshot[k]; });
                sync.arrive_and_wait();
            }
        };
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
        work(0);
    }

    const EngineConfig& cfg_;
    std::size_t run_;
    std::uint64_t seed_;
    const TransferObserver& observer_;
    std::mutex observer_mutex_;
    std::vector<TaskTrainer> trainers_;
};

}  // namespace detail

/// Independent training per task: each iteration evaluates the training RMSE
/// once and takes one Adam step.
inline std::vector<RunResult> run_stp(const std::vector<TaskSpec>& tasks, const EngineConfig& cfg) {
    if (cfg.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    detail::validate_tasks(tasks);
    const TransferObserver none;
    std::vector<RunResult> out;
    for (std::size_t run = 0; run < cfg.runs; ++run) {
        detail::CoTraining ct(tasks, cfg, run, none);
        ct.run_stp();
        auto r = ct.results(Method::stp);
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

/// Co-training with inter-task transfer. Per iteration and task (ascending):
/// evaluate, rescore sources, select, mutate, cross over, evaluate the trial,
/// keep it on strict improvement, book the attempt, then one Adam step.
inline std::vector<RunResult> run_mtoct(const std::vector<TaskSpec>& tasks, const EngineConfig& cfg,
                                        const TransferObserver& observer = {}) {
    if (cfg.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    detail::validate_tasks(tasks);
    if (cfg.transfer.n_s > 0) cfg.transfer.validate(tasks.size());
    std::vector<RunResult> out;
    for (std::size_t run = 0; run < cfg.runs; ++run) {
        detail::CoTraining ct(tasks, cfg, run, observer);
        ct.run_mtoct();
        auto r = ct.results(Method::mtoct);
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

inline std::vector<RunResult> run_method(const std::vector<TaskSpec>& tasks, const EngineConfig& cfg) {
    return cfg.method == Method::stp ? run_stp(tasks, cfg) : run_mtoct(tasks, cfg);
}

}  // namespace mtoct

#endif
