#ifndef MTOCT_RANDOM_HPP
#define MTOCT_RANDOM_HPP

#include <cstdint>
#include <random>

namespace mtoct {

using Rng = std::mt19937_64;

/// Purposes for which independent random streams are derived.
enum class StreamPurpose : std::uint64_t { init = 1, sus = 2, crossover = 3 };

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Seed reported for run `run` under `master_seed`.
constexpr std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t run) noexcept {
    return detail::splitmix64(detail::splitmix64(master_seed) ^ (run + 1) * 0xD1B54A32D192ED03ULL);
}

// Streams for different (task, purpose) pairs never share state, so toggling
// transfer cannot perturb the initialization draws.
inline Rng make_stream(std::uint64_t seed, std::uint64_t task_id, StreamPurpose purpose) {
    std::uint64_t s = detail::splitmix64(seed ^ detail::splitmix64(task_id + 0x1000));
    s = detail::splitmix64(s ^ static_cast<std::uint64_t>(purpose) * 0xA0761D6478BD642FULL);
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    return Rng(seq);
}

}  // namespace mtoct

#endif
