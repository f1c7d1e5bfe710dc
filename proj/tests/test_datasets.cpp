#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"

using namespace lanekit;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "lanekit_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

SyntheticSpec tiny_spec() {
    SyntheticSpec s;
    s.n = 600;
    s.dim = 8;
    s.n_clusters = 6;
    s.n_queries = 25;
    s.seed = 11;
    return s;
}

// Full sort of every distance; independent of the partial-sort path.
std::vector<std::int32_t> sorted_truth(const Dataset& ds, std::span<const float> q, std::size_t depth) {
    std::vector<std::int32_t> ids(ds.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int32_t>(i);
    std::stable_sort(ids.begin(), ids.end(), [&](std::int32_t a, std::int32_t b) {
        return ds.distance_to(q, a) < ds.distance_to(q, b);
    });
    ids.resize(depth);
    return ids;
}

BenchmarkManifest write_benchmark(const Benchmark& b, const fs::path& dir) {
    BenchmarkManifest m;
    m.name = "tiny";
    save_fvecs(dir / m.base_file, b.base->vectors());
    save_fvecs(dir / m.queries_file, b.queries);
    save_ivecs(dir / m.groundtruth_file, b.ground_truth);
    m.base_checksum = hex64(file_checksum(dir / m.base_file));
    m.queries_checksum = hex64(file_checksum(dir / m.queries_file));
    m.groundtruth_checksum = hex64(file_checksum(dir / m.groundtruth_file));
    m.gt_depth = b.ground_truth.cols;
    m.save(dir / "benchmark.json");
    return m;
}

}  // namespace

TEST(Synthetic, SameSeedSameBytes) {
    auto a = generate_synthetic(tiny_spec()), b = generate_synthetic(tiny_spec());
    EXPECT_EQ(encode_vecs(a.base->vectors()), encode_vecs(b.base->vectors()));
    EXPECT_EQ(encode_vecs(a.queries), encode_vecs(b.queries));
    EXPECT_EQ(a.ground_truth, b.ground_truth);
    auto spec = tiny_spec();
    spec.seed = 12;
    EXPECT_NE(generate_synthetic(spec).base->vectors(), a.base->vectors());
}

TEST(Synthetic, ShapesAndJson) {
    auto b = generate_synthetic(tiny_spec());
    EXPECT_EQ(b.base->size(), 600u);
    EXPECT_EQ(b.base->dim(), 8u);
    EXPECT_EQ(b.n_queries(), 25u);
    EXPECT_EQ(b.ground_truth.cols, 100u);
    EXPECT_EQ(b.relevant.size(), 25u);
    auto round = SyntheticSpec::from_json(tiny_spec().to_json());
    EXPECT_EQ(round.to_json(), tiny_spec().to_json());
    auto bad = tiny_spec();
    bad.n_clusters = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = tiny_spec();
    bad.cluster_std = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    EXPECT_EQ(mini_sift_spec().n, 50'000u);
}

TEST(Synthetic, InnerProductDataIsUnitNorm) {
    auto spec = tiny_spec();
    spec.metric = Metric::InnerProduct;
    auto b = generate_synthetic(spec);
    EXPECT_EQ(b.base->metric(), Metric::InnerProduct);
    for (std::size_t q = 0; q < b.n_queries(); ++q) {
        double n2 = 0;
        for (float v : b.query(q)) n2 += double(v) * v;
        EXPECT_NEAR(n2, 1.0, 1e-5);
    }
}

TEST(GroundTruth, CollapsedClusterTiesResolveById) {
    auto spec = tiny_spec();
    spec.n_clusters = 1;
    spec.cluster_std = 1e-30;
    spec.query_noise = 0.0;
    auto b = generate_synthetic(spec);
    auto row = b.ground_truth.row(0);
    for (std::size_t j = 0; j < row.size(); ++j) EXPECT_EQ(row[j], static_cast<std::int32_t>(j));
}

TEST(GroundTruth, StoredVectorsFindThemselves) {
    auto ds = testutil::random_dataset(300, 6, 3);
    auto gt = build_ground_truth(*ds, ds->vectors(), 5);
    for (std::size_t q = 0; q < 300; ++q) EXPECT_EQ(gt.row(q)[0], static_cast<std::int32_t>(q));
}

TEST(GroundTruth, TwoPointsDepthOne) {
    auto ds = std::make_shared<const Dataset>(Matrix<float>(2, 2, {0, 0, 10, 0}), Metric::L2);
    Matrix<float> q(2, 2, {1, 0, 9, 0});
    auto gt = build_ground_truth(*ds, q, 1);
    EXPECT_EQ(gt.data, (std::vector<std::int32_t>{0, 1}));
    EXPECT_THROW(build_ground_truth(*ds, q, 3), std::invalid_argument);
}

TEST(GroundTruth, MatchesFullSortAndIsThreadInvariant) {
    auto b = generate_synthetic(tiny_spec(), false);
    auto one = build_ground_truth(*b.base, b.queries, 50, 1);
    auto four = build_ground_truth(*b.base, b.queries, 50, 4);
    EXPECT_EQ(one, four);
    for (std::size_t q = 0; q < b.n_queries(); ++q) {
        auto want = sorted_truth(*b.base, b.query(q), 50);
        auto row = one.row(q);
        EXPECT_EQ(std::vector<std::int32_t>(row.begin(), row.end()), want);
    }
}

TEST(GroundTruth, CacheInvalidatesOnInputChange) {
    auto dir = fresh_dir("gt_cache");
    auto b = generate_synthetic(tiny_spec(), false);
    const auto cache = dir / "gt.ivecs";
    bool rebuilt = false;
    auto first = load_or_build_ground_truth(cache, *b.base, b.queries, 20, 1, &rebuilt);
    EXPECT_TRUE(rebuilt);
    EXPECT_TRUE(fs::exists(dir / "gt.ivecs.meta.json"));
    auto second = load_or_build_ground_truth(cache, *b.base, b.queries, 20, 1, &rebuilt);
    EXPECT_FALSE(rebuilt);
    EXPECT_EQ(first, second);
    load_or_build_ground_truth(cache, *b.base, b.queries, 30, 1, &rebuilt);
    EXPECT_TRUE(rebuilt);
    auto moved = b.queries;
    moved.data[0] += 1.0f;
    auto third = load_or_build_ground_truth(cache, *b.base, moved, 30, 1, &rebuilt);
    EXPECT_TRUE(rebuilt);
    EXPECT_EQ(third, build_ground_truth(*b.base, moved, 30));
    fs::remove(dir / "gt.ivecs.meta.json");
    load_or_build_ground_truth(cache, *b.base, moved, 30, 1, &rebuilt);
    EXPECT_TRUE(rebuilt);
}

TEST(BenchmarkManifest, LoadsAndVerifiesChecksums) {
    auto dir = fresh_dir("manifest");
    auto b = generate_synthetic(tiny_spec());
    write_benchmark(b, dir);
    auto m = BenchmarkManifest::load(dir / "benchmark.json");
    auto loaded = load_benchmark(m, dir);
    EXPECT_EQ(loaded.base->vectors(), b.base->vectors());
    EXPECT_EQ(loaded.ground_truth, b.ground_truth);
    EXPECT_EQ(loaded.relevant, b.relevant);

    {
        std::fstream f(dir / m.base_file, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(10);
        f.put('\x7f');
    }
    try {
        load_benchmark(m, dir);
        FAIL() << "expected checksum mismatch";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("checksum mismatch"), std::string::npos);
    }
}

TEST(BenchmarkManifest, MissingFiles) {
    auto dir = fresh_dir("manifest_missing");
    auto b = generate_synthetic(tiny_spec());
    auto m = write_benchmark(b, dir);
    fs::remove(dir / m.groundtruth_file);
    EXPECT_THROW(load_benchmark(m, dir, true), std::runtime_error);
    EXPECT_NO_THROW(load_benchmark(m, dir, false));
    fs::remove(dir / m.queries_file);
    EXPECT_THROW(load_benchmark(m, dir, false), std::runtime_error);
}
