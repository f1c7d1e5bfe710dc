#pragma once

// Position-based partitioning of a PRF-ordered candidate pool across lanes.
//
// Lane r of M takes the dedicated positions {r, r+M, ..., r+(k_ded-1)M} and
// then the shared positions [M*k_ded, M*k_ded + k_shr). Dedicated positions
// are distinct congruence classes mod M inside the prefix of length M*k_ded,
// so at alpha = 1 the lane selections are pairwise disjoint, and for every
// alpha the union is exactly the pool prefix of length M*k_ded + k_shr.
//
// Every function here reads only (pool, config, lane id); there is no input
// through which one lane could observe another.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanekit/core.hpp"

namespace lanekit {

struct LaneAssignment {
    LaneId lane_id = 0;
    std::vector<std::size_t> dedicated_positions;
    std::vector<std::size_t> shared_positions;
    std::vector<CandidateId> selected_ids;  // dedicated first, then shared

    std::vector<std::size_t> positions() const {
        auto all = dedicated_positions;
        all.insert(all.end(), shared_positions.begin(), shared_positions.end());
        return all;
    }
};

/// How a lane fills the k_shr slots left after its dedicated positions.
enum class BackfillStyle {
    /// Contiguous suffix starting at M*k_ded, identical for every lane.
    SharedSuffix,
    /// Scan the pool from position 0 and take the first ids not yet chosen.
    /// Kept for comparison only: for 0 < alpha < 1 it refills from other
    /// lanes' dedicated positions and the union no longer follows
    /// M*k_ded + k_shr.
    ScanFromStart,
};

inline LaneAssignment alpha_partition(std::span<const CandidateId> pool,
                                      const PartitionConfig& cfg, LaneId lane_id,
                                      BackfillStyle style = BackfillStyle::SharedSuffix) {
    const std::size_t M = cfg.lanes();
    if (lane_id >= M)
        throw std::invalid_argument("alpha_partition: lane_id " + std::to_string(lane_id) +
                                    " out of range for M=" + std::to_string(M));
    if (pool.size() != cfg.pool_size())
        throw std::invalid_argument("alpha_partition: pool has " + std::to_string(pool.size()) +
                                    " entries, config expects K_pool=" +
                                    std::to_string(cfg.pool_size()));
    if (pool.size() < cfg.required_pool())
        throw std::invalid_argument("alpha_partition: infeasible configuration");

    const std::size_t k_ded = cfg.k_ded();
    const std::size_t k_shr = cfg.k_shr();

    LaneAssignment a;
    a.lane_id = lane_id;
    a.dedicated_positions.reserve(k_ded);
    a.selected_ids.reserve(cfg.k_lane());
    for (std::size_t j = 0; j < k_ded; ++j) {
        const std::size_t pos = lane_id + j * M;
        a.dedicated_positions.push_back(pos);
        a.selected_ids.push_back(pool[pos]);
    }

    if (style == BackfillStyle::SharedSuffix) {
        const std::size_t start = M * k_ded;
        for (std::size_t j = 0; j < k_shr; ++j) {
            a.shared_positions.push_back(start + j);
            a.selected_ids.push_back(pool[start + j]);
        }
        return a;
    }

    // ScanFromStart: dedicated positions are exactly those congruent to
    // lane_id below M*k_ded, which makes the membership test arithmetic.
    auto is_dedicated = [&](std::size_t pos) {
        return pos < M * k_ded && pos % M == lane_id;
    };
    for (std::size_t pos = 0; pos < pool.size() && a.selected_ids.size() < cfg.k_lane(); ++pos) {
        if (is_dedicated(pos)) continue;
        a.shared_positions.push_back(pos);
        a.selected_ids.push_back(pool[pos]);
    }
    return a;
}

/// Unequal lane budgets. Dedicated positions are dealt round-robin in lane
/// order over the first sum(k_ded_r) positions, skipping lanes whose quota is
/// exhausted; equal budgets therefore reproduce alpha_partition exactly.
inline LaneAssignment alpha_partition_heterogeneous(std::span<const CandidateId> pool,
                                                    const HeterogeneousPartitionConfig& cfg,
                                                    LaneId lane_id) {
    const std::size_t M = cfg.lanes();
    if (lane_id >= M)
        throw std::invalid_argument("alpha_partition_heterogeneous: lane_id out of range");
    if (pool.size() != cfg.pool_size())
        throw std::invalid_argument("alpha_partition_heterogeneous: pool size != K_pool");
    if (pool.size() < cfg.required_pool())
        throw std::invalid_argument("alpha_partition_heterogeneous: infeasible configuration");

    LaneAssignment a;
    a.lane_id = lane_id;

    std::vector<std::size_t> remaining(M);
    std::size_t dedicated_total = 0;
    for (LaneId r = 0; r < M; ++r) {
        remaining[r] = cfg.k_ded(r);
        dedicated_total += remaining[r];
    }
    std::size_t pos = 0;
    while (pos < dedicated_total) {
        for (LaneId r = 0; r < M && pos < dedicated_total; ++r) {
            if (remaining[r] == 0) continue;
            --remaining[r];
            if (r == lane_id) {
                a.dedicated_positions.push_back(pos);
                a.selected_ids.push_back(pool[pos]);
            }
            ++pos;
        }
    }
    for (std::size_t j = 0; j < cfg.k_shr(lane_id); ++j) {
        a.shared_positions.push_back(dedicated_total + j);
        a.selected_ids.push_back(pool[dedicated_total + j]);
    }
    return a;
}

/// Predicted distinct coverage |S_union| = M*k_ded + k_shr. Equals
/// k_lane*(1 + alpha*(M-1)) whenever alpha*k_lane is integral.
inline std::size_t coverage(const PartitionConfig& cfg) {
    return cfg.lanes() * cfg.k_ded() + cfg.k_shr();
}

/// Expected lift of alpha = 1 over alpha = 0 given the baseline convergence
/// coefficient: M / (1 + (M-1)(1-rho0)).
inline double predicted_gain(double rho0, std::size_t lanes) {
    if (!(rho0 >= 0.0 && rho0 <= 1.0))
        throw std::invalid_argument("predicted_gain: rho0 must lie in [0, 1]");
    if (lanes < 1) throw std::invalid_argument("predicted_gain: M must be >= 1");
    const double m = static_cast<double>(lanes);
    return m / (1.0 + (m - 1.0) * (1.0 - rho0));
}

/// Distinct baseline coverage implied by rho0: k_lane*(1 + (M-1)(1-rho0)).
inline double approximate_u0(double rho0, std::size_t lanes, std::size_t k_lane) {
    return static_cast<double>(k_lane) *
           (1.0 + (static_cast<double>(lanes) - 1.0) * (1.0 - rho0));
}

inline double recommend_alpha(double rho0) {
    if (rho0 >= 0.9) return 1.0;
    if (rho0 >= 0.6) return 0.7;
    return 0.5;
}

/// Audit record of one lane's assignment, written as one JSON line.
inline nlohmann::json assignment_record(std::uint64_t query_id, const LaneAssignment& a) {
    return {{"query_id", query_id},
            {"lane_id", a.lane_id},
            {"positions", a.positions()},
            {"ids", a.selected_ids}};
}

class AssignmentDumpWriter {
public:
    explicit AssignmentDumpWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open assignment dump " + path);
    }

    void write(std::uint64_t query_id, const LaneAssignment& a) {
        out_ << assignment_record(query_id, a).dump() << '\n';
    }

private:
    std::ofstream out_;
};

}  // namespace lanekit
