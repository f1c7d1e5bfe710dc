#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace lanekit;

TEST(PartitionConfig, DerivedQuotas) {
    struct Case {
        std::size_t M, k_lane;
        double alpha;
        std::size_t k_ded, k_shr, k_total;
    };
    for (auto c : {Case{4, 16, 1.0, 16, 0, 64}, Case{4, 16, 0.0, 0, 16, 64}, Case{2, 4, 0.5, 2, 2, 8}}) {
        PartitionConfig cfg(c.M, c.k_lane, c.alpha, c.M * c.k_lane);
        auto q = derive_quotas(cfg);
        EXPECT_EQ(q.k_ded, c.k_ded);
        EXPECT_EQ(q.k_shr, c.k_shr);
        EXPECT_EQ(q.k_total, c.k_total);
    }
}

TEST(PartitionConfig, FloorOfFractionalDedication) {
    EXPECT_EQ(PartitionConfig(4, 10, 0.25, 40).k_ded(), 2u);
    EXPECT_EQ(PartitionConfig(4, 10, 0.33, 40).k_ded(), 3u);
    // 0.7 * 10 is 6.999... in binary; the quota is still 7
    EXPECT_EQ(PartitionConfig(4, 10, 0.7, 40).k_ded(), 7u);
    EXPECT_EQ(PartitionConfig(3, 16, 0.75, 48).k_ded(), 12u);
}

TEST(PartitionConfig, QuotasAlwaysSumToLaneBudget) {
    for (std::size_t k = 1; k <= 40; ++k)
        for (int a = 0; a <= 20; ++a) {
            PartitionConfig cfg(3, k, a / 20.0, 3 * k);
            EXPECT_EQ(cfg.k_ded() + cfg.k_shr(), k);
            EXPECT_LE(cfg.k_ded(), k);
        }
}

TEST(PartitionConfig, RejectsExactlyTheInfeasibleConfigs) {
    for (std::size_t M = 1; M <= 5; ++M)
        for (std::size_t k = 1; k <= 8; ++k)
            for (double a : {0.0, 0.25, 0.5, 0.75, 1.0})
                for (std::size_t pool = 1; pool <= M * k + 2; ++pool) {
                    const std::size_t kd = static_cast<std::size_t>(std::floor(a * k + 1e-9));
                    const bool feasible = pool >= M * kd + (k - kd);
                    if (feasible)
                        EXPECT_NO_THROW(PartitionConfig(M, k, a, pool));
                    else
                        EXPECT_THROW(PartitionConfig(M, k, a, pool), std::invalid_argument);
                }
}

TEST(PartitionConfig, RejectsBadFields) {
    EXPECT_THROW(PartitionConfig(0, 16, 1.0, 64), std::invalid_argument);
    EXPECT_THROW(PartitionConfig(4, 0, 1.0, 64), std::invalid_argument);
    EXPECT_THROW(PartitionConfig(4, 16, -0.1, 64), std::invalid_argument);
    EXPECT_THROW(PartitionConfig(4, 16, 1.1, 64), std::invalid_argument);
    EXPECT_THROW(PartitionConfig(4, 16, std::nan(""), 64), std::invalid_argument);
    EXPECT_THROW(PartitionConfig(4, 16, 1.0, 0), std::invalid_argument);
}

TEST(PartitionConfig, JsonRoundTripAndUnknownKeys) {
    auto j = nlohmann::json::parse(R"({"M": 4, "k_lane": 16, "alpha": 0.5, "K_pool": 64, "query_seed": 99})");
    auto cfg = PartitionConfig::from_json(j);
    EXPECT_EQ(cfg.lanes(), 4u);
    EXPECT_EQ(cfg.k_ded(), 8u);
    EXPECT_EQ(cfg.query_seed(), 99u);
    EXPECT_EQ(PartitionConfig::from_json(cfg.to_json()).to_json(), cfg.to_json());

    j["extra"] = 1;
    EXPECT_THROW(PartitionConfig::from_json(j), std::invalid_argument);
    EXPECT_THROW(PartitionConfig::from_json(nlohmann::json::parse(R"({"M": 4, "k_lane": 16})")),
                 std::invalid_argument);
    EXPECT_THROW(PartitionConfig::from_json(
                     nlohmann::json::parse(R"({"M": 4, "k_lane": 16, "alpha": 1, "K_pool": 63})")),
                 std::invalid_argument);
}

TEST(HeterogeneousConfig, FeasibilityUsesLargestSharedNeed) {
    HeterogeneousPartitionConfig h({2, 6}, 0.5, 8);
    EXPECT_EQ(h.k_total(), 8u);
    EXPECT_EQ(h.dedicated_total(), 1u + 3u);
    EXPECT_EQ(h.max_shared(), 3u);
    EXPECT_EQ(h.required_pool(), 7u);
    EXPECT_NO_THROW(HeterogeneousPartitionConfig({2, 6}, 0.5, 7));
    EXPECT_THROW(HeterogeneousPartitionConfig({2, 6}, 0.5, 6), std::invalid_argument);
    EXPECT_THROW(HeterogeneousPartitionConfig({2, 0}, 0.5, 8), std::invalid_argument);
    EXPECT_THROW(HeterogeneousPartitionConfig({}, 0.5, 8), std::invalid_argument);
}

TEST(ScoredId, RanksByDistanceThenId) {
    ScoredId a{5, 1.0f}, b{3, 1.0f}, c{9, 0.5f};
    EXPECT_TRUE(ranks_before(c, a));
    EXPECT_TRUE(ranks_before(b, a));
    EXPECT_FALSE(ranks_before(a, b));
    EXPECT_FALSE(ranks_before(a, a));
    // inner product scores are reported as similarities
    EXPECT_FLOAT_EQ(ScoredId({1, -0.75f}).score(Metric::InnerProduct), 0.75f);
    EXPECT_FLOAT_EQ(ScoredId({1, 2.0f}).score(Metric::L2), 2.0f);
}

TEST(CostCounters, AddAcrossLanes) {
    CostCounters a{3, 1, 10, std::chrono::nanoseconds(5)};
    CostCounters b{4, 2, 20, std::chrono::nanoseconds(7)};
    auto c = a + b;
    EXPECT_EQ(c.node_visits, 7u);
    EXPECT_EQ(c.list_scans, 3u);
    EXPECT_EQ(c.vectors_scored, 30u);
    EXPECT_EQ(c.planner_time.count(), 12);
}

TEST(Metric, NamesRoundTrip) {
    EXPECT_EQ(metric_from_string(to_string(Metric::L2)), Metric::L2);
    EXPECT_EQ(metric_from_string(to_string(Metric::InnerProduct)), Metric::InnerProduct);
    EXPECT_THROW(metric_from_string("cosine"), std::invalid_argument);
}
