#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lanekit/core.hpp"

namespace lanekit {

inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct SplitMixStep {
    std::uint64_t state;
    std::uint64_t output;
};

/// One step of the reference splitmix64 generator.
constexpr SplitMixStep splitmix64_next(std::uint64_t state) {
    state += kSplitMixGamma;
    return {state, splitmix64_finalize(state)};
}

/// Stateless mix: the first splitmix64 output for `x` used as a seed.
constexpr std::uint64_t splitmix64_mix(std::uint64_t x) { return splitmix64_next(x).output; }

/// Small stateful wrapper for seeded streams (level sampling, jitter, delays).
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        auto step = splitmix64_next(state_);
        state_ = step.state;
        return step.output;
    }

    /// Uniform double in (0, 1].
    double next_unit() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// The only thing lanes share besides the static PRF definition.
struct PrfKey {
    std::uint64_t query_seed = 0;

    static constexpr PrfKey for_query(std::uint64_t global_seed, std::uint64_t query_index) {
        return {splitmix64_mix(global_seed ^ query_index)};
    }

    friend bool operator==(const PrfKey&, const PrfKey&) = default;
};

constexpr std::uint64_t prf_score(PrfKey key, CandidateId doc_id) {
    return splitmix64_finalize(key.query_seed ^ splitmix64_mix(doc_id));
}

/// Reorders `pool` by (prf_score ascending, id ascending). Throws on
/// duplicate ids, which always indicate a pool construction bug.
inline std::vector<CandidateId> permute_pool(std::span<const CandidateId> pool, PrfKey key) {
    std::vector<std::pair<std::uint64_t, CandidateId>> keyed;
    keyed.reserve(pool.size());
    for (auto id : pool) keyed.emplace_back(prf_score(key, id), id);
    std::sort(keyed.begin(), keyed.end());
    std::vector<CandidateId> out;
    out.reserve(keyed.size());
    for (std::size_t i = 0; i < keyed.size(); ++i) {
        if (i > 0 && keyed[i].second == keyed[i - 1].second)
            throw std::invalid_argument("permute_pool: duplicate id " +
                                        std::to_string(keyed[i].second) + " in pool");
        out.push_back(keyed[i].second);
    }
    return out;
}

}  // namespace lanekit
