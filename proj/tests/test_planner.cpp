#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <sstream>

#include "test_util.hpp"

using namespace lanekit;

namespace {

// Position oracle written from the ownership rule rather than the lane's
// point of view: each pool position is owned by one lane (dedicated), by
// all lanes (shared suffix) or by none.
std::vector<std::set<std::size_t>> oracle_positions(std::size_t M, std::size_t k_lane, double alpha) {
    const auto k_ded = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(k_lane) + 1e-9));
    const std::size_t k_shr = k_lane - k_ded;
    std::vector<std::set<std::size_t>> lanes(M);
    for (std::size_t p = 0; p < M * k_ded + k_shr; ++p) {
        if (p < M * k_ded)
            lanes[p % M].insert(p);
        else
            for (auto& l : lanes) l.insert(p);
    }
    return lanes;
}

std::vector<CandidateId> random_pool(std::size_t n, std::mt19937_64& rng) {
    std::set<CandidateId> ids;
    std::uniform_int_distribution<CandidateId> any(0, 1'000'000'000);
    while (ids.size() < n) ids.insert(any(rng));
    std::vector<CandidateId> v(ids.begin(), ids.end());
    return permute_pool(v, PrfKey{rng()});
}

}  // namespace

TEST(AlphaPartition, FullDedicationTakesEveryMthPosition) {
    auto pool = testutil::iota_ids(64);
    PartitionConfig cfg(4, 16, 1.0, 64);
    auto a = alpha_partition(pool, cfg, 0);
    std::vector<std::size_t> want;
    for (std::size_t p = 0; p < 64; p += 4) want.push_back(p);
    EXPECT_EQ(a.dedicated_positions, want);
    EXPECT_TRUE(a.shared_positions.empty());
    EXPECT_EQ(a.selected_ids, std::vector<CandidateId>(want.begin(), want.end()));
}

TEST(AlphaPartition, ZeroDedicationGivesIdenticalPrefix) {
    auto pool = testutil::iota_ids(40, 500);
    PartitionConfig cfg(4, 10, 0.0, 40);
    for (LaneId r = 0; r < 4; ++r) {
        auto a = alpha_partition(pool, cfg, r);
        EXPECT_EQ(a.selected_ids, std::vector<CandidateId>(pool.begin(), pool.begin() + 10));
        EXPECT_TRUE(a.dedicated_positions.empty());
    }
}

TEST(AlphaPartition, HalfDedicationHandTrace) {
    // pool c0..c7, M=2, k_lane=4
    auto pool = testutil::iota_ids(8);
    PartitionConfig cfg(2, 4, 0.5, 8);
    auto a0 = alpha_partition(pool, cfg, 0), a1 = alpha_partition(pool, cfg, 1);
    EXPECT_EQ(a0.selected_ids, (std::vector<CandidateId>{0, 2, 4, 5}));
    EXPECT_EQ(a1.selected_ids, (std::vector<CandidateId>{1, 3, 4, 5}));
    EXPECT_EQ(jaccard_overlap({a0.selected_ids, a1.selected_ids}), 2.0 / 6.0);
    EXPECT_EQ(coverage(cfg), 6u);
}

TEST(AlphaPartition, Errors) {
    auto pool = testutil::iota_ids(64);
    PartitionConfig cfg(4, 16, 1.0, 64);
    EXPECT_THROW(alpha_partition(pool, cfg, 4), std::invalid_argument);
    auto short_pool = testutil::iota_ids(63);
    EXPECT_THROW(alpha_partition(short_pool, cfg, 0), std::invalid_argument);
}

TEST(AlphaPartition, MatchesOwnershipOracle) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t M = 1 + rng() % 8, k = 1 + rng() % 24;
        const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const std::size_t need = M * dedicated_quota(alpha, k) + (k - dedicated_quota(alpha, k));
        const std::size_t K = need + rng() % 5;
        auto pool = random_pool(K, rng);
        PartitionConfig cfg(M, k, alpha, K);
        auto want = oracle_positions(M, k, alpha);
        for (LaneId r = 0; r < M; ++r) {
            auto a = alpha_partition(pool, cfg, r);
            auto pos = a.positions();
            EXPECT_EQ(std::set<std::size_t>(pos.begin(), pos.end()), want[r]);
            EXPECT_EQ(pos.size(), k);
            for (std::size_t i = 0; i < pos.size(); ++i) EXPECT_EQ(a.selected_ids[i], pool[pos[i]]);
            for (auto p : a.dedicated_positions) EXPECT_EQ(p % M, r);
            EXPECT_TRUE(std::is_sorted(a.dedicated_positions.begin(), a.dedicated_positions.end()));
        }
    }
}

TEST(AlphaPartition, DisjointAtFullDedicationProperty) {
    std::mt19937_64 rng(1);
    const auto t0 = std::chrono::steady_clock::now();
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t M = 1 + rng() % 16, k = 1 + rng() % 32;
        const std::size_t K = M * k + rng() % (M * k + 1);
        auto pool = random_pool(K, rng);
        PartitionConfig cfg(M, k, 1.0, K);
        std::set<CandidateId> all;
        std::size_t total = 0;
        for (LaneId r = 0; r < M; ++r) {
            auto ids = alpha_partition(pool, cfg, r).selected_ids;
            total += ids.size();
            all.insert(ids.begin(), ids.end());
        }
        ASSERT_EQ(total, M * k);
        ASSERT_EQ(all.size(), M * k);
    }
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
}

TEST(AlphaPartition, CoverageLawAndPrefixMonotonicity) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t M = 1 + rng() % 10, k = 1 + rng() % 32;
        const std::size_t K = M * k;
        auto pool = random_pool(K, rng);
        std::set<CandidateId> previous;
        for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            PartitionConfig cfg(M, k, alpha, K);
            std::set<CandidateId> uni;
            for (LaneId r = 0; r < M; ++r) {
                auto ids = alpha_partition(pool, cfg, r).selected_ids;
                uni.insert(ids.begin(), ids.end());
            }
            ASSERT_EQ(uni.size(), coverage(cfg));
            ASSERT_EQ(uni, std::set<CandidateId>(pool.begin(), pool.begin() + static_cast<long>(coverage(cfg))));
            ASSERT_TRUE(std::includes(uni.begin(), uni.end(), previous.begin(), previous.end()));
            previous = uni;
        }
    }
}

TEST(AlphaPartition, ScanFromStartBreaksCoverageForPartialDedication) {
    auto pool = testutil::iota_ids(8);
    PartitionConfig cfg(2, 4, 0.5, 8);
    auto a0 = alpha_partition(pool, cfg, 0, BackfillStyle::ScanFromStart);
    auto a1 = alpha_partition(pool, cfg, 1, BackfillStyle::ScanFromStart);
    // each lane refills from the other lane's dedicated positions
    EXPECT_EQ(a0.selected_ids, (std::vector<CandidateId>{0, 2, 1, 3}));
    EXPECT_EQ(a1.selected_ids, (std::vector<CandidateId>{1, 3, 0, 2}));
    std::set<CandidateId> uni(a0.selected_ids.begin(), a0.selected_ids.end());
    uni.insert(a1.selected_ids.begin(), a1.selected_ids.end());
    EXPECT_EQ(uni.size(), 4u);
    EXPECT_NE(uni.size(), coverage(cfg));
}

TEST(AlphaPartition, ScanFromStartAgreesAtEndpoints) {
    auto pool = testutil::iota_ids(64);
    for (double alpha : {0.0, 1.0}) {
        PartitionConfig cfg(4, 16, alpha, 64);
        for (LaneId r = 0; r < 4; ++r)
            EXPECT_EQ(alpha_partition(pool, cfg, r).selected_ids,
                      alpha_partition(pool, cfg, r, BackfillStyle::ScanFromStart).selected_ids);
    }
}

TEST(HeterogeneousPartition, EqualBudgetsReduceToHomogeneous) {
    auto pool = testutil::iota_ids(8);
    HeterogeneousPartitionConfig h({4, 4}, 1.0, 8);
    PartitionConfig cfg(2, 4, 1.0, 8);
    for (LaneId r = 0; r < 2; ++r) {
        auto a = alpha_partition_heterogeneous(pool, h, r);
        auto b = alpha_partition(pool, cfg, r);
        EXPECT_EQ(a.selected_ids, b.selected_ids);
        EXPECT_EQ(a.positions(), b.positions());
    }
}

TEST(HeterogeneousPartition, UnequalBudgetsFullDedication) {
    auto pool = testutil::iota_ids(8);
    HeterogeneousPartitionConfig h({2, 6}, 1.0, 8);
    auto a0 = alpha_partition_heterogeneous(pool, h, 0), a1 = alpha_partition_heterogeneous(pool, h, 1);
    // round robin: 0,1 | 2,3 | then lane 1 alone: 4,5,6,7
    EXPECT_EQ(a0.dedicated_positions, (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(a1.dedicated_positions, (std::vector<std::size_t>{1, 3, 4, 5, 6, 7}));
    std::set<CandidateId> uni(a0.selected_ids.begin(), a0.selected_ids.end());
    uni.insert(a1.selected_ids.begin(), a1.selected_ids.end());
    EXPECT_EQ(uni.size(), 8u);
}

TEST(HeterogeneousPartition, UnequalBudgetsZeroDedication) {
    auto pool = testutil::iota_ids(8);
    HeterogeneousPartitionConfig h({2, 6}, 0.0, 8);
    EXPECT_EQ(alpha_partition_heterogeneous(pool, h, 0).selected_ids, (std::vector<CandidateId>{0, 1}));
    EXPECT_EQ(alpha_partition_heterogeneous(pool, h, 1).selected_ids,
              (std::vector<CandidateId>{0, 1, 2, 3, 4, 5}));
}

TEST(HeterogeneousPartition, DedicatedBlocksDisjointRandomized) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::size_t> budgets(1 + rng() % 6);
        for (auto& b : budgets) b = 1 + rng() % 20;
        const double alpha = (rng() % 5) / 4.0;
        HeterogeneousPartitionConfig probe(budgets, alpha, 1'000'000);
        const std::size_t K = probe.required_pool() + rng() % 3;
        HeterogeneousPartitionConfig h(budgets, alpha, K);
        auto pool = random_pool(K, rng);
        std::set<std::size_t> dedicated;
        std::size_t dedicated_count = 0;
        for (LaneId r = 0; r < budgets.size(); ++r) {
            auto a = alpha_partition_heterogeneous(pool, h, r);
            ASSERT_EQ(a.selected_ids.size(), budgets[r]);
            ASSERT_EQ(a.dedicated_positions.size(), h.k_ded(r));
            dedicated.insert(a.dedicated_positions.begin(), a.dedicated_positions.end());
            dedicated_count += a.dedicated_positions.size();
            for (auto p : a.dedicated_positions) ASSERT_LT(p, h.dedicated_total());
            for (auto p : a.shared_positions) ASSERT_GE(p, h.dedicated_total());
        }
        ASSERT_EQ(dedicated.size(), dedicated_count);
    }
}

TEST(Coverage, ClosedForms) {
    EXPECT_EQ(coverage(PartitionConfig(4, 16, 1.0, 64)), 64u);
    EXPECT_EQ(coverage(PartitionConfig(4, 16, 0.0, 64)), 16u);
    EXPECT_EQ(coverage(PartitionConfig(4, 16, 0.5, 64)), 40u);
    // integral alpha * k_lane agrees with k_lane * (1 + alpha (M - 1))
    for (std::size_t M : {2u, 3u, 8u})
        for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            PartitionConfig cfg(M, 16, a, M * 16);
            EXPECT_DOUBLE_EQ(static_cast<double>(coverage(cfg)), 16.0 * (1.0 + a * (M - 1.0)));
        }
}

TEST(PredictedGain, EndpointsAndInterior) {
    for (std::size_t M : {2u, 4u, 8u}) {
        EXPECT_EQ(predicted_gain(1.0, M), static_cast<double>(M));
        EXPECT_EQ(predicted_gain(0.0, M), 1.0);
    }
    EXPECT_DOUBLE_EQ(predicted_gain(0.5, 4), 1.6);
    EXPECT_THROW(predicted_gain(-0.01, 4), std::invalid_argument);
    EXPECT_THROW(predicted_gain(1.01, 4), std::invalid_argument);
    EXPECT_THROW(predicted_gain(0.5, 0), std::invalid_argument);
}

TEST(PredictedGain, CoverageApproximationExactAtEndpoints) {
    EXPECT_DOUBLE_EQ(approximate_u0(1.0, 4, 16), 16.0);
    EXPECT_DOUBLE_EQ(approximate_u0(0.0, 4, 16), 64.0);
    EXPECT_DOUBLE_EQ(64.0 / approximate_u0(0.3, 4, 16), predicted_gain(0.3, 4));
}

TEST(RecommendAlpha, Brackets) {
    EXPECT_EQ(recommend_alpha(0.95), 1.0);
    EXPECT_EQ(recommend_alpha(0.9), 1.0);
    EXPECT_EQ(recommend_alpha(0.75), 0.7);
    EXPECT_EQ(recommend_alpha(0.6), 0.7);
    EXPECT_EQ(recommend_alpha(0.59), 0.5);
    EXPECT_EQ(recommend_alpha(0.0), 0.5);
}

TEST(AssignmentDump, RecordShape) {
    auto pool = testutil::iota_ids(8, 100);
    auto a = alpha_partition(pool, PartitionConfig(2, 4, 0.5, 8), 1);
    auto j = assignment_record(7, a);
    EXPECT_EQ(j["query_id"], 7);
    EXPECT_EQ(j["lane_id"], 1);
    EXPECT_EQ(j["positions"], (std::vector<std::size_t>{1, 3, 4, 5}));
    EXPECT_EQ(j["ids"], (std::vector<CandidateId>{101, 103, 104, 105}));
}
