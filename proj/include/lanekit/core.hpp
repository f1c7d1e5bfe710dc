#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace lanekit {

using CandidateId = std::uint64_t;
using LaneId = std::size_t;

enum class Metric : std::uint32_t { L2 = 0, InnerProduct = 1 };

inline std::string to_string(Metric m) { return m == Metric::L2 ? "l2" : "ip"; }

inline Metric metric_from_string(const std::string& s) {
    if (s == "l2" || s == "L2") return Metric::L2;
    if (s == "ip" || s == "inner_product" || s == "InnerProduct") return Metric::InnerProduct;
    throw std::invalid_argument("unknown metric: " + s);
}

/// A candidate together with its ranking key. `distance` is always
/// lower-is-better: squared L2 for Metric::L2 and the negated inner product
/// for Metric::InnerProduct, so one ordering serves both metrics.
struct ScoredId {
    CandidateId id = 0;
    float distance = 0.0f;

    /// Natural score: distance for L2, similarity for inner product.
    float score(Metric m) const { return m == Metric::L2 ? distance : -distance; }

    friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

/// Total order used for every top-k: ascending distance, ties by ascending id.
inline bool ranks_before(const ScoredId& a, const ScoredId& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
}

inline std::vector<CandidateId> ids_of(std::span<const ScoredId> hits) {
    std::vector<CandidateId> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(h.id);
    return out;
}

/// floor(alpha * k_lane), robust to products that land a few ulps below an
/// integer (0.29 * 100 == 28.999999999999996).
inline std::size_t dedicated_quota(double alpha, std::size_t k_lane) {
    const double raw = std::floor(alpha * static_cast<double>(k_lane) + 1e-9);
    return std::min(k_lane, static_cast<std::size_t>(std::max(0.0, raw)));
}

struct Quotas {
    std::size_t k_ded = 0;
    std::size_t k_shr = 0;
    std::size_t k_total = 0;

    friend bool operator==(const Quotas&, const Quotas&) = default;
};

/// Per-query partition parameters. Immutable; construction rejects
/// configurations whose pool cannot hold M*k_ded + k_shr positions.
class PartitionConfig {
public:
    PartitionConfig(std::size_t lanes, std::size_t k_lane, double alpha, std::size_t pool_size,
                    std::uint64_t query_seed = 0)
        : lanes_(lanes), k_lane_(k_lane), alpha_(alpha), pool_size_(pool_size),
          query_seed_(query_seed) {
        if (lanes_ < 1) throw std::invalid_argument("PartitionConfig: M must be >= 1");
        if (k_lane_ < 1) throw std::invalid_argument("PartitionConfig: k_lane must be >= 1");
        if (!std::isfinite(alpha_) || alpha_ < 0.0 || alpha_ > 1.0)
            throw std::invalid_argument("PartitionConfig: alpha must lie in [0, 1]");
        if (pool_size_ < 1) throw std::invalid_argument("PartitionConfig: K_pool must be >= 1");
        if (pool_size_ < required_pool())
            throw std::invalid_argument("PartitionConfig: infeasible, K_pool=" +
                                        std::to_string(pool_size_) + " < M*k_ded + k_shr=" +
                                        std::to_string(required_pool()));
    }

    std::size_t lanes() const { return lanes_; }
    std::size_t k_lane() const { return k_lane_; }
    double alpha() const { return alpha_; }
    std::size_t pool_size() const { return pool_size_; }
    std::uint64_t query_seed() const { return query_seed_; }

    std::size_t k_total() const { return lanes_ * k_lane_; }
    std::size_t k_ded() const { return dedicated_quota(alpha_, k_lane_); }
    std::size_t k_shr() const { return k_lane_ - k_ded(); }
    std::size_t required_pool() const { return lanes_ * k_ded() + k_shr(); }

    PartitionConfig with_query_seed(std::uint64_t seed) const {
        return PartitionConfig(lanes_, k_lane_, alpha_, pool_size_, seed);
    }

    static PartitionConfig from_json(const nlohmann::json& j) {
        static const char* const kKeys[] = {"M", "k_lane", "alpha", "K_pool", "query_seed"};
        if (!j.is_object()) throw std::invalid_argument("PartitionConfig: expected a JSON object");
        for (const auto& [key, _] : j.items()) {
            if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys))
                throw std::invalid_argument("PartitionConfig: unknown key '" + key + "'");
        }
        for (const char* required : {"M", "k_lane", "alpha", "K_pool"}) {
            if (!j.contains(required))
                throw std::invalid_argument(std::string("PartitionConfig: missing key '") +
                                            required + "'");
        }
        auto count = [&](const char* key) {
            const auto& v = j.at(key);
            if (!v.is_number_integer() || v.get<long long>() < 0)
                throw std::invalid_argument(std::string("PartitionConfig: '") + key +
                                            "' must be a non-negative integer");
            return v.get<std::size_t>();
        };
        if (!j.at("alpha").is_number())
            throw std::invalid_argument("PartitionConfig: 'alpha' must be a number");
        std::uint64_t seed = 0;
        if (j.contains("query_seed")) {
            if (!j.at("query_seed").is_number_unsigned() && !j.at("query_seed").is_number_integer())
                throw std::invalid_argument("PartitionConfig: 'query_seed' must be an integer");
            seed = j.at("query_seed").get<std::uint64_t>();
        }
        return PartitionConfig(count("M"), count("k_lane"), j.at("alpha").get<double>(),
                               count("K_pool"), seed);
    }

    nlohmann::json to_json() const {
        return {{"M", lanes_}, {"k_lane", k_lane_}, {"alpha", alpha_},
                {"K_pool", pool_size_}, {"query_seed", query_seed_}};
    }

private:
    std::size_t lanes_;
    std::size_t k_lane_;
    double alpha_;
    std::size_t pool_size_;
    std::uint64_t query_seed_;
};

inline Quotas derive_quotas(const PartitionConfig& cfg) {
    return {cfg.k_ded(), cfg.k_shr(), cfg.k_total()};
}

/// Lanes with unequal budgets. Dedicated blocks share the pool prefix of
/// length sum(k_ded_r); the shared suffix starts right after it, so the pool
/// must also hold the largest shared need.
class HeterogeneousPartitionConfig {
public:
    HeterogeneousPartitionConfig(std::vector<std::size_t> lane_budgets, double alpha,
                                 std::size_t pool_size, std::uint64_t query_seed = 0)
        : budgets_(std::move(lane_budgets)), alpha_(alpha), pool_size_(pool_size),
          query_seed_(query_seed) {
        if (budgets_.empty())
            throw std::invalid_argument("HeterogeneousPartitionConfig: need at least one lane");
        for (auto b : budgets_)
            if (b < 1)
                throw std::invalid_argument("HeterogeneousPartitionConfig: lane budget must be >= 1");
        if (!std::isfinite(alpha_) || alpha_ < 0.0 || alpha_ > 1.0)
            throw std::invalid_argument("HeterogeneousPartitionConfig: alpha must lie in [0, 1]");
        if (pool_size_ < required_pool())
            throw std::invalid_argument("HeterogeneousPartitionConfig: infeasible, K_pool=" +
                                        std::to_string(pool_size_) + " < " +
                                        std::to_string(required_pool()));
    }

    std::size_t lanes() const { return budgets_.size(); }
    const std::vector<std::size_t>& lane_budgets() const { return budgets_; }
    std::size_t k_lane(LaneId r) const { return budgets_.at(r); }
    double alpha() const { return alpha_; }
    std::size_t pool_size() const { return pool_size_; }
    std::uint64_t query_seed() const { return query_seed_; }

    std::size_t k_ded(LaneId r) const { return dedicated_quota(alpha_, budgets_.at(r)); }
    std::size_t k_shr(LaneId r) const { return budgets_.at(r) - k_ded(r); }

    std::size_t k_total() const {
        std::size_t t = 0;
        for (auto b : budgets_) t += b;
        return t;
    }

    std::size_t dedicated_total() const {
        std::size_t t = 0;
        for (LaneId r = 0; r < budgets_.size(); ++r) t += k_ded(r);
        return t;
    }

    std::size_t max_shared() const {
        std::size_t m = 0;
        for (LaneId r = 0; r < budgets_.size(); ++r) m = std::max(m, k_shr(r));
        return m;
    }

    std::size_t required_pool() const { return dedicated_total() + max_shared(); }

private:
    std::vector<std::size_t> budgets_;
    double alpha_;
    std::size_t pool_size_;
    std::uint64_t query_seed_;
};

/// Work counters. Per-call values; summed across lanes.
struct CostCounters {
    std::uint64_t node_visits = 0;
    std::uint64_t list_scans = 0;
    std::uint64_t vectors_scored = 0;
    std::chrono::nanoseconds planner_time{0};

    CostCounters& operator+=(const CostCounters& o) {
        node_visits += o.node_visits;
        list_scans += o.list_scans;
        vectors_scored += o.vectors_scored;
        planner_time += o.planner_time;
        return *this;
    }
    friend CostCounters operator+(CostCounters a, const CostCounters& b) { return a += b; }

    nlohmann::json to_json() const {
        return {{"node_visits", node_visits},
                {"list_scans", list_scans},
                {"vectors_scored", vectors_scored},
                {"planner_ns", planner_time.count()}};
    }
};

struct LaneResult {
    LaneId lane_id = 0;
    std::vector<ScoredId> selected;  // no duplicate ids
    CostCounters cost;
    std::chrono::nanoseconds wall_time{0};

    std::vector<CandidateId> ids() const { return ids_of(selected); }
};

struct MergedResult {
    std::vector<CandidateId> union_ids;  // ascending
    std::vector<ScoredId> topk;          // ranks_before order
    double overlap_rho = 0.0;
    std::size_t union_size = 0;

    std::vector<CandidateId> topk_ids() const { return ids_of(topk); }
};

}  // namespace lanekit
