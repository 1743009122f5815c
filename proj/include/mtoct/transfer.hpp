#ifndef MTOCT_TRANSFER_HPP
#define MTOCT_TRANSFER_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mtoct {

struct TransferConfig {
    std::size_t n_s = 3;      // sources selected per transfer
    double F = 0.2;           // mutation scale
    double CR = 0.5;          // crossover rate
    double q_init = 0.005;    // initial helpfulness score
    double alpha = 0.3;       // score smoothing
    double eps_reward = 1e-12;
    bool forced_dimension = false;  // classic DE j_rand: one dimension always taken from the mutant

    /// Throws std::invalid_argument naming the offending field.
    void validate(std::size_t n_tasks) const {
        auto fail = [](const std::string& field, const std::string& why) {
            throw std::invalid_argument(field + ": " + why);
        };
        if (n_s < 3) fail("n_s", "DE/rand/1 mutation needs at least 3 source tasks");
        if (n_tasks < n_s + 1)
            fail("n_s", std::to_string(n_s) + " sources need at least " + std::to_string(n_s + 1) + " tasks, have " +
                            std::to_string(n_tasks));
        if (!(F >= 0.0 && F <= 1.0)) fail("F", "must lie in [0, 1]");
        if (!(CR >= 0.0 && CR <= 1.0)) fail("CR", "must lie in [0, 1]");
        if (!(q_init > 0.0)) fail("q_init", "must be positive");
        if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha", "must lie in (0, 1]");
        if (!(eps_reward > 0.0)) fail("eps_reward", "must be positive");
    }
};

/// Source bookkeeping for one target task. Entry k of q/ns/na refers to task
/// `sources[k]`; the target never appears in `sources`.
struct TransferState {
    std::size_t target = 0;
    std::vector<std::size_t> sources;
    std::vector<double> q;
    std::vector<std::uint64_t> ns;
    std::vector<std::uint64_t> na;
    double alpha = 0.3;
    double eps_reward = 1e-12;

    std::size_t source_count() const noexcept { return sources.size(); }
};

inline TransferState make_transfer_state(std::size_t target, std::size_t n_tasks, const TransferConfig& cfg) {
    if (target >= n_tasks) throw std::invalid_argument("transfer: target index out of range");
    TransferState s;
    s.target = target;
    for (std::size_t i = 0; i < n_tasks; ++i)
        if (i != target) s.sources.push_back(i);
    s.q.assign(s.sources.size(), cfg.q_init);
    s.ns.assign(s.sources.size(), 0);
    s.na.assign(s.sources.size(), 0);
    s.alpha = cfg.alpha;
    s.eps_reward = cfg.eps_reward;
    return s;
}

/// Probability-matching update: q <- alpha q + (1 - alpha) ns / (na + eps).
/// A source that never helps decays geometrically; q is floored at the
/// smallest normal double so it stays strictly positive.
inline void update_scores(TransferState& state) {
    constexpr double floor = std::numeric_limits<double>::min();
    for (std::size_t k = 0; k < state.q.size(); ++k) {
        const double reward = static_cast<double>(state.ns[k]) / (static_cast<double>(state.na[k]) + state.eps_reward);
        state.q[k] = std::max(floor, state.alpha * state.q[k] + (1.0 - state.alpha) * reward);
    }
}

/// Stochastic universal selection of `count` distinct positions in `scores`.
/// Pointer collisions are refilled uniformly from the positions not yet
/// chosen; the result is returned in random order.
template <typename Urbg>
std::vector<std::size_t> sus_select(std::span<const double> scores, std::size_t count, Urbg& rng) {
    const std::size_t m = scores.size();
    if (count == 0 || count > m)
        throw std::invalid_argument("sus_select: cannot select " + std::to_string(count) + " of " +
                                    std::to_string(m) + " sources");
    double total = 0.0;
    for (double q : scores) {
        if (!(q > 0.0)) throw std::invalid_argument("sus_select: scores must be positive");
        total += q;
    }

    const double spacing = 1.0 / static_cast<double>(count);
    std::uniform_real_distribution<double> start(0.0, spacing);
    const double u = start(rng);

    std::vector<char> taken(m, 0);
    std::vector<std::size_t> chosen;
    chosen.reserve(count);
    std::size_t idx = 0;
    double cumulative = scores[0] / total;
    for (std::size_t k = 0; k < count; ++k) {
        const double pointer = u + static_cast<double>(k) * spacing;
        while (pointer >= cumulative && idx + 1 < m) cumulative += scores[++idx] / total;
        if (!taken[idx]) {
            taken[idx] = 1;
            chosen.push_back(idx);
        }
    }
    while (chosen.size() < count) {
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < m; ++i)
            if (!taken[i]) free.push_back(i);
        std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
        const std::size_t i = free[pick(rng)];
        taken[i] = 1;
        chosen.push_back(i);
    }
    std::shuffle(chosen.begin(), chosen.end(), rng);
    return chosen;
}

/// Task indices of `count` sources for the state's target.
template <typename Urbg>
std::vector<std::size_t> select_sources(const TransferState& state, std::size_t count, Urbg& rng) {
    auto picks = sus_select(std::span<const double>(state.q), count, rng);
    for (auto& p : picks) p = state.sources[p];
    return picks;
}

/// DE/rand/1: base + F (diff_a - diff_b).
inline Eigen::VectorXd mutate(const Eigen::VectorXd& base, const Eigen::VectorXd& diff_a, const Eigen::VectorXd& diff_b,
                              double F) {
    if (base.size() != diff_a.size() || base.size() != diff_b.size())
        throw std::invalid_argument("mutate: dimension mismatch");
    return base + F * (diff_a - diff_b);
}

/// Binomial crossover: dimension d comes from the mutant iff rand_d <= CR,
/// rand_d uniform on [0, 1).
template <typename Urbg>
Eigen::VectorXd crossover(const Eigen::VectorXd& mutant, const Eigen::VectorXd& target, double CR, Urbg& rng,
                          bool forced_dimension = false) {
    if (mutant.size() != target.size()) throw std::invalid_argument("crossover: dimension mismatch");
    Eigen::Index forced = -1;
    if (forced_dimension && mutant.size() > 0) {
        std::uniform_int_distribution<Eigen::Index> pick(0, mutant.size() - 1);
        forced = pick(rng);
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd trial(target.size());
    for (Eigen::Index d = 0; d < trial.size(); ++d) trial(d) = (unit(rng) <= CR || d == forced) ? mutant(d) : target(d);
    return trial;
}

/// Credits one attempt to every selected source (given as task indices), and
/// one success as well when the trial replaced the target.
inline void record_attempt(TransferState& state, std::span<const std::size_t> selected, bool succeeded) {
    for (std::size_t task : selected) {
        const auto it = std::find(state.sources.begin(), state.sources.end(), task);
        if (it == state.sources.end())
            throw std::invalid_argument("record_attempt: task " + std::to_string(task) + " is not a source");
        const auto k = static_cast<std::size_t>(it - state.sources.begin());
        ++state.na[k];
        if (succeeded) ++state.ns[k];
    }
}

}  // namespace mtoct

#endif
