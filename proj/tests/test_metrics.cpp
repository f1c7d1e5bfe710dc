#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "test_util.hpp"

using namespace lanekit;

TEST(Jaccard, WorkedExample) {
    EXPECT_DOUBLE_EQ(jaccard_overlap({{1, 2, 3, 4}, {3, 4, 5}}), 0.4);
}

TEST(Jaccard, IdenticalDisjointAndSingle) {
    EXPECT_DOUBLE_EQ(jaccard_overlap({{1, 2, 3}, {3, 2, 1}, {2, 1, 3}}), 1.0);
    EXPECT_DOUBLE_EQ(jaccard_overlap({{1, 2}, {3, 4}, {5}}), 0.0);
    EXPECT_DOUBLE_EQ(jaccard_overlap({{7, 8}}), 1.0);
    EXPECT_DOUBLE_EQ(jaccard_overlap({{1, 1, 2}, {2, 1}}), 1.0);
    EXPECT_THROW(jaccard_overlap({{}, {}}), std::invalid_argument);
    std::vector<std::vector<CandidateId>> none;
    EXPECT_THROW(jaccard_overlap(std::span<const std::vector<CandidateId>>(none)), std::invalid_argument);
}

TEST(Jaccard, InvariantToSetAndElementOrder) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::vector<CandidateId>> sets(2 + rng() % 4);
        for (auto& s : sets)
            for (int i = 0; i < 10; ++i) s.push_back(rng() % 25);
        const double base = jaccard_overlap(std::span<const std::vector<CandidateId>>(sets));
        auto shuffled = sets;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        for (auto& s : shuffled) std::shuffle(s.begin(), s.end(), rng);
        EXPECT_DOUBLE_EQ(jaccard_overlap(std::span<const std::vector<CandidateId>>(shuffled)), base);
    }
}

TEST(Recall, HalfAndEdgeCases) {
    std::vector<CandidateId> result{1, 2, 3, 4}, truth{1, 3, 5, 7};
    EXPECT_DOUBLE_EQ(recall_at_k(result, truth, 4), 0.5);
    EXPECT_DOUBLE_EQ(recall_at_k(truth, truth, 4), 1.0);
    std::vector<CandidateId> shorter{1};
    EXPECT_DOUBLE_EQ(recall_at_k(shorter, truth, 4), 0.25);
    EXPECT_THROW(recall_at_k(result, truth, 0), std::invalid_argument);
    EXPECT_THROW(recall_at_k(result, truth, 5), std::invalid_argument);
}

TEST(HitAndMrr, RankCutoffs) {
    std::vector<CandidateId> result = testutil::iota_ids(20, 100);
    std::vector<CandidateId> at10{109}, at11{110}, at4{103, 115};
    EXPECT_EQ(hit_at_k(result, at10, 10), 1.0);
    EXPECT_EQ(hit_at_k(result, at11, 10), 0.0);
    EXPECT_EQ(mrr_at_k(result, at4, 10), 0.25);
    EXPECT_EQ(mrr_at_k(result, at11, 10), 0.0);
    std::vector<CandidateId> empty;
    EXPECT_FALSE(hit_at_k(result, empty, 10).has_value());
    EXPECT_FALSE(mrr_at_k(result, empty, 10).has_value());
}

TEST(Aggregates, PopulationStdAndExclusions) {
    std::vector<double> v{1, 2, 3, 4};
    auto ms = mean_std(v);
    EXPECT_DOUBLE_EQ(ms.mean, 2.5);
    EXPECT_DOUBLE_EQ(ms.std, std::sqrt(1.25));
    EXPECT_EQ(mean_std(std::vector<double>{}).count, 0u);
    std::vector<std::optional<double>> o{1.0, std::nullopt, 0.0};
    auto pm = mean_present(o);
    EXPECT_DOUBLE_EQ(pm.mean, 0.5);
    EXPECT_EQ(pm.included, 2u);
    EXPECT_EQ(pm.excluded, 1u);
    auto q = QualityReport::from_seeds("recall", {0.5, 0.7});
    EXPECT_DOUBLE_EQ(q.mean, 0.6);
    EXPECT_NEAR(q.std, 0.1, 1e-12);
}

TEST(MetricsCsv, HeaderAndRowFormat) {
    MetricsCsv csv;
    csv.add({"mini-sift", "hnsw", 4, 16, MetricsCsv::format_alpha(0.25), 42, "recall@10", 0.5});
    EXPECT_EQ(csv.str(),
              "dataset,index,M,k_lane,alpha,seed,metric,value\n"
              "mini-sift,hnsw,4,16,0.25,42,recall@10,0.500000\n");
    EXPECT_EQ(MetricsCsv::format_alpha(1.0), "1");
    EXPECT_EQ(MetricsCsv::format_alpha(0.0), "0");
}

TEST(OverlapStats, SyntheticFixtures) {
    auto disjoint = overlap_stats_from_lane_sets({synthetic_lane_sets(4, 16, 0)}, 16);
    EXPECT_DOUBLE_EQ(disjoint.rho0.mean, 0.0);
    EXPECT_DOUBLE_EQ(disjoint.u0.mean, 64.0);
    auto identical = overlap_stats_from_lane_sets({synthetic_lane_sets(4, 16, 16)}, 16);
    EXPECT_DOUBLE_EQ(identical.rho0.mean, 1.0);
    EXPECT_DOUBLE_EQ(identical.u0.mean, 16.0);
    auto half = overlap_stats_from_lane_sets({synthetic_lane_sets(2, 4, 2)}, 4);
    EXPECT_DOUBLE_EQ(half.rho0.mean, 2.0 / 6.0);
    EXPECT_DOUBLE_EQ(half.u0.mean, 6.0);
    EXPECT_THROW(synthetic_lane_sets(2, 4, 5), std::invalid_argument);
}

TEST(MeasureRho0, NaiveIdenticalLanesConverge) {
    auto b = testutil::small_benchmark(1500, 20);
    IndexHandle h(HnswLiteIndex::build(b.base, {}));
    auto s = measure_rho0(h, b.queries, 20, 4, 16);
    EXPECT_DOUBLE_EQ(s.rho0.mean, 1.0);
    EXPECT_DOUBLE_EQ(s.u0.mean, 16.0);
    EXPECT_EQ(s.rho0_per_query.size(), 20u);
    EXPECT_EQ(s.to_json()["M"], 4);
    EXPECT_THROW(measure_rho0(h, b.queries, 20, 4, 16, LaneMode::partitioned()), std::invalid_argument);
    std::vector<std::size_t> out_of_range{20};
    EXPECT_THROW(measure_rho0(h, b.queries, out_of_range, 4, 16), std::out_of_range);
}

TEST(Recommend, UsesMeasuredOverlap) {
    auto r = recommend(1.0, 4, 16);
    EXPECT_DOUBLE_EQ(r.alpha, 1.0);
    EXPECT_DOUBLE_EQ(r.predicted_gain, 4.0);
    EXPECT_DOUBLE_EQ(r.u0_approx, 16.0);
    EXPECT_EQ(r.to_json()["alpha"], 1.0);
}

TEST(AssignmentDump, OfflineCheckerRecomputesOverlap) {
    const PartitionConfig cfg(4, 16, 0.5, 40, 77);
    auto pool = testutil::iota_ids(40, 1000);
    auto permuted = permute_pool(pool, PrfKey{cfg.query_seed()});
    std::stringstream dump;
    for (LaneId r = 0; r < 4; ++r) dump << assignment_record(3, alpha_partition(permuted, cfg, r)).dump() << '\n';
    const PartitionConfig full(4, 16, 1.0, 64, 78);
    auto pool2 = testutil::iota_ids(64);
    auto permuted2 = permute_pool(pool2, PrfKey{full.query_seed()});
    for (LaneId r = 0; r < 4; ++r) dump << assignment_record(9, alpha_partition(permuted2, full, r)).dump() << '\n';

    auto rows = check_assignment_dump(dump);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].query_id, 3u);
    EXPECT_EQ(rows[0].union_size, coverage(cfg));
    EXPECT_DOUBLE_EQ(rows[0].rho, 8.0 / 40.0);
    EXPECT_EQ(rows[1].union_size, 64u);
    EXPECT_DOUBLE_EQ(rows[1].rho, 0.0);

    std::stringstream bad("{\"query_id\": 1}\n");
    EXPECT_THROW(check_assignment_dump(bad), std::runtime_error);
}
