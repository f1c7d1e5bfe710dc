#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "lanekit/index/dataset.hpp"
#include "lanekit/lanes.hpp"
#include "lanekit/metrics.hpp"
#include "lanekit/prf.hpp"

namespace lanekit {

/// Runs naive lanes (identical or jittered) on each sampled query and
/// records the overlap of their result sets and the distinct coverage U0.
inline OverlapStats measure_rho0(const IndexHandle& index, const Matrix<float>& queries,
                                 std::span<const std::size_t> sample, std::size_t lanes,
                                 std::size_t k_lane, LaneMode mode = LaneMode::naive_identical(),
                                 std::uint64_t global_seed = 42, const LaneOptions& opts = {}) {
    if (sample.empty()) throw std::invalid_argument("measure_rho0: empty query sample");
    if (!mode.naive()) throw std::invalid_argument("measure_rho0: needs a naive lane mode");
    std::vector<std::vector<std::vector<CandidateId>>> per_query;
    per_query.reserve(sample.size());
    for (std::size_t qi : sample) {
        if (qi >= queries.rows) throw std::out_of_range("measure_rho0: query index out of range");
        const PartitionConfig cfg(lanes, k_lane, 0.0, k_lane,
                                  PrfKey::for_query(global_seed, qi).query_seed);
        auto o = run_query(index, queries.row(qi), cfg, mode, StragglerPolicy::wait_all(), k_lane, opts, qi);
        std::vector<std::vector<CandidateId>> sets;
        for (const auto& l : o.per_lane) sets.push_back(l.ids());
        per_query.push_back(std::move(sets));
    }
    auto stats = overlap_stats_from_lane_sets(per_query, k_lane);
    stats.lanes = lanes;
    return stats;
}

inline OverlapStats measure_rho0(const IndexHandle& index, const Matrix<float>& queries,
                                 std::size_t sample_size, std::size_t lanes, std::size_t k_lane,
                                 LaneMode mode = LaneMode::naive_identical(),
                                 std::uint64_t global_seed = 42, const LaneOptions& opts = {}) {
    std::vector<std::size_t> sample(std::min(sample_size, queries.rows));
    for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = i;
    return measure_rho0(index, queries, sample, lanes, k_lane, mode, global_seed, opts);
}

/// Lane sets for overlap fixtures: `lanes` sets of `k_lane` ids where
/// consecutive lanes share `shared` leading ids (0 = disjoint, k_lane =
/// identical).
inline std::vector<std::vector<CandidateId>> synthetic_lane_sets(std::size_t lanes, std::size_t k_lane,
                                                                 std::size_t shared) {
    if (shared > k_lane) throw std::invalid_argument("synthetic_lane_sets: shared > k_lane");
    std::vector<std::vector<CandidateId>> out(lanes);
    CandidateId next = shared;
    for (auto& s : out) {
        for (CandidateId i = 0; i < shared; ++i) s.push_back(i);
        while (s.size() < k_lane) s.push_back(next++);
    }
    return out;
}

struct Recommendation {
    double rho0 = 0.0;
    double alpha = 0.0;
    double predicted_gain = 0.0;
    double u0_approx = 0.0;

    nlohmann::json to_json() const {
        return {{"rho0", rho0}, {"alpha", alpha}, {"predicted_gain", predicted_gain}, {"U0_approx", u0_approx}};
    }
};

inline Recommendation recommend(double rho0, std::size_t lanes, std::size_t k_lane) {
    return {rho0, recommend_alpha(rho0), predicted_gain(rho0, lanes), approximate_u0(rho0, lanes, k_lane)};
}

}  // namespace lanekit
