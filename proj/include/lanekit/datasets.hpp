#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lanekit/core.hpp"
#include "lanekit/index/brute_force.hpp"
#include "lanekit/index/dataset.hpp"
#include "lanekit/index/vecs_io.hpp"

namespace lanekit {

inline constexpr std::size_t kGroundTruthDepth = 100;

/// Gaussian-mixture benchmark parameters.
struct SyntheticSpec {
    std::size_t n = 50'000;
    std::size_t dim = 32;
    std::size_t n_clusters = 64;
    double cluster_std = 0.5;
    std::uint64_t seed = 7;
    Metric metric = Metric::L2;
    std::size_t n_queries = 500;
    /// Query = random base vector + N(0, (query_noise * cluster_std)^2) per component.
    double query_noise = 0.5;
    std::size_t gt_depth = kGroundTruthDepth;
    /// Oracle top-m ids of each query form its relevance set.
    std::size_t relevant_m = 1;

    void validate() const {
        if (dim < 1) throw std::invalid_argument("SyntheticSpec: d must be >= 1");
        if (n_clusters < 1) throw std::invalid_argument("SyntheticSpec: n_clusters must be >= 1");
        if (n < n_clusters) throw std::invalid_argument("SyntheticSpec: N must be >= n_clusters");
        if (!(cluster_std > 0.0)) throw std::invalid_argument("SyntheticSpec: cluster_std must be > 0");
        if (n_queries < 1) throw std::invalid_argument("SyntheticSpec: need at least one query");
        if (query_noise < 0.0) throw std::invalid_argument("SyntheticSpec: query_noise must be >= 0");
    }

    nlohmann::json to_json() const {
        return {{"N", n},           {"d", dim},
                {"n_clusters", n_clusters}, {"cluster_std", cluster_std},
                {"seed", seed},     {"metric", to_string(metric)},
                {"n_queries", n_queries}, {"query_noise", query_noise},
                {"gt_depth", gt_depth}, {"relevant_m", relevant_m}};
    }

    static SyntheticSpec from_json(const nlohmann::json& j) {
        SyntheticSpec s;
        s.n = j.value("N", s.n);
        s.dim = j.value("d", s.dim);
        s.n_clusters = j.value("n_clusters", s.n_clusters);
        s.cluster_std = j.value("cluster_std", s.cluster_std);
        s.seed = j.value("seed", s.seed);
        s.metric = metric_from_string(j.value("metric", std::string("l2")));
        s.n_queries = j.value("n_queries", s.n_queries);
        s.query_noise = j.value("query_noise", s.query_noise);
        s.gt_depth = j.value("gt_depth", s.gt_depth);
        s.relevant_m = j.value("relevant_m", s.relevant_m);
        return s;
    }
};

/// Desk-scale stand-in for SIFT1M: N=50,000, d=32, 500 queries.
inline SyntheticSpec mini_sift_spec() { return SyntheticSpec{}; }

struct Benchmark {
    std::string name;
    std::shared_ptr<const Dataset> base;
    Matrix<float> queries;
    Matrix<std::int32_t> ground_truth;  // row i: oracle top-depth ids of query i
    std::vector<std::vector<CandidateId>> relevant;

    std::span<const float> query(std::size_t i) const { return queries.row(i); }
    std::size_t n_queries() const { return queries.rows; }

    std::vector<CandidateId> truth(std::size_t i, std::size_t k) const {
        auto row = ground_truth.row(i);
        if (k > row.size()) throw std::invalid_argument("Benchmark: ground truth shallower than k");
        return {row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k)};
    }
};

/// Oracle top-`depth` ids per query, computed in parallel with fixed output order.
inline Matrix<std::int32_t> build_ground_truth(const Dataset& base, const Matrix<float>& queries,
                                               std::size_t depth = kGroundTruthDepth,
                                               unsigned threads = 1) {
    if (depth > base.size())
        throw std::invalid_argument("build_ground_truth: depth " + std::to_string(depth) +
                                    " exceeds N=" + std::to_string(base.size()));
    if (queries.cols != base.dim()) throw std::invalid_argument("build_ground_truth: dimension mismatch");
    Matrix<std::int32_t> gt(queries.rows, depth);
    auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t q = begin; q < queries.rows; q += step) {
            auto hits = brute_force_topk(base, queries.row(q), depth);
            for (std::size_t j = 0; j < depth; ++j) gt.row(q)[j] = static_cast<std::int32_t>(hits[j].id);
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    }
    return gt;
}

inline std::vector<std::vector<CandidateId>> relevance_from_truth(const Matrix<std::int32_t>& gt,
                                                                  std::size_t m) {
    std::vector<std::vector<CandidateId>> rel(gt.rows);
    const std::size_t take = std::min(m, gt.cols);
    for (std::size_t q = 0; q < gt.rows; ++q)
        for (std::size_t j = 0; j < take; ++j) rel[q].push_back(static_cast<CandidateId>(gt.row(q)[j]));
    return rel;
}

inline Benchmark generate_synthetic(const SyntheticSpec& spec, bool with_ground_truth = true,
                                    unsigned threads = 1) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<float> unit(0.0f, 1.0f);
    std::uniform_int_distribution<std::size_t> pick_cluster(0, spec.n_clusters - 1);

    Matrix<float> centers(spec.n_clusters, spec.dim);
    for (auto& v : centers.data) v = unit(rng);

    const float sigma = static_cast<float>(spec.cluster_std);
    Matrix<float> base(spec.n, spec.dim);
    for (std::size_t i = 0; i < spec.n; ++i) {
        // every cluster gets at least one member
        const std::size_t c = i < spec.n_clusters ? i : pick_cluster(rng);
        auto row = base.row(i);
        for (std::size_t t = 0; t < spec.dim; ++t) row[t] = centers.row(c)[t] + sigma * unit(rng);
    }

    std::uniform_int_distribution<std::size_t> pick_member(0, spec.n - 1);
    const float qsigma = static_cast<float>(spec.cluster_std * spec.query_noise);
    Matrix<float> queries(spec.n_queries, spec.dim);
    for (std::size_t q = 0; q < spec.n_queries; ++q) {
        auto src = base.row(pick_member(rng));
        auto row = queries.row(q);
        for (std::size_t t = 0; t < spec.dim; ++t) row[t] = src[t] + qsigma * unit(rng);
    }
    if (spec.metric == Metric::InnerProduct) {
        normalize_rows(base);
        normalize_rows(queries);
    }

    Benchmark b;
    b.name = "synthetic";
    b.base = std::make_shared<const Dataset>(std::move(base), spec.metric);
    b.queries = std::move(queries);
    if (with_ground_truth) {
        b.ground_truth = build_ground_truth(*b.base, b.queries, std::min(spec.gt_depth, spec.n), threads);
        b.relevant = relevance_from_truth(b.ground_truth, spec.relevant_m);
    }
    return b;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

/// Ground truth cached as plain ivecs plus a `<file>.meta.json` sidecar that
/// records the base/query checksums it was computed from. A checksum
/// mismatch (or missing sidecar) forces recomputation.
inline Matrix<std::int32_t> load_or_build_ground_truth(const std::filesystem::path& cache,
                                                       const Dataset& base,
                                                       const Matrix<float>& queries,
                                                       std::size_t depth, unsigned threads,
                                                       bool* rebuilt = nullptr) {
    const auto meta_path = std::filesystem::path(cache.string() + ".meta.json");
    const std::string base_sum = hex64(checksum(base.vectors()));
    const std::string query_sum = hex64(checksum(queries));
    if (std::filesystem::exists(cache) && std::filesystem::exists(meta_path)) {
        std::ifstream in(meta_path);
        auto meta = nlohmann::json::parse(in, nullptr, false);
        if (!meta.is_discarded() && meta.value("base_checksum", "") == base_sum &&
            meta.value("queries_checksum", "") == query_sum && meta.value("depth", 0u) == depth) {
            auto gt = load_ivecs(cache);
            if (gt.rows == queries.rows && gt.cols == depth) {
                if (rebuilt) *rebuilt = false;
                return gt;
            }
        }
    }
    auto gt = build_ground_truth(base, queries, depth, threads);
    save_ivecs(cache, gt);
    std::ofstream out(meta_path);
    out << nlohmann::json{{"base_checksum", base_sum}, {"queries_checksum", query_sum}, {"depth", depth}}
               .dump(2)
        << '\n';
    if (rebuilt) *rebuilt = true;
    return gt;
}

/// Benchmark manifest: names the base/query/ground-truth files with checksums.
struct BenchmarkManifest {
    std::string name = "mini-sift";
    Metric metric = Metric::L2;
    std::string base_file = "base.fvecs";
    std::string queries_file = "queries.fvecs";
    std::string groundtruth_file = "groundtruth.ivecs";
    std::string base_checksum;
    std::string queries_checksum;
    std::string groundtruth_checksum;
    std::size_t gt_depth = kGroundTruthDepth;
    std::size_t relevant_m = 1;
    nlohmann::json generator;

    nlohmann::json to_json() const {
        nlohmann::json j = {{"name", name},
                            {"metric", to_string(metric)},
                            {"base", base_file},
                            {"queries", queries_file},
                            {"groundtruth", groundtruth_file},
                            {"checksums",
                             {{"base", base_checksum},
                              {"queries", queries_checksum},
                              {"groundtruth", groundtruth_checksum}}},
                            {"gt_depth", gt_depth},
                            {"relevant_m", relevant_m}};
        if (!generator.is_null()) j["generator"] = generator;
        return j;
    }

    static BenchmarkManifest from_json(const nlohmann::json& j) {
        BenchmarkManifest m;
        m.name = j.value("name", m.name);
        m.metric = metric_from_string(j.value("metric", std::string("l2")));
        m.base_file = j.at("base").get<std::string>();
        m.queries_file = j.at("queries").get<std::string>();
        m.groundtruth_file = j.value("groundtruth", m.groundtruth_file);
        if (j.contains("checksums")) {
            const auto& c = j.at("checksums");
            m.base_checksum = c.value("base", "");
            m.queries_checksum = c.value("queries", "");
            m.groundtruth_checksum = c.value("groundtruth", "");
        }
        m.gt_depth = j.value("gt_depth", m.gt_depth);
        m.relevant_m = j.value("relevant_m", m.relevant_m);
        if (j.contains("generator")) m.generator = j.at("generator");
        return m;
    }

    static BenchmarkManifest load(const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("cannot open benchmark manifest " + p.string());
        return from_json(nlohmann::json::parse(in));
    }

    void save(const std::filesystem::path& p) const {
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        out << to_json().dump(2) << '\n';
    }
};

/// Loads base and queries named by a manifest (paths relative to `root`),
/// verifying recorded checksums. Ground truth is loaded when present.
inline Benchmark load_benchmark(const BenchmarkManifest& m, const std::filesystem::path& root,
                                bool require_ground_truth = true) {
    auto check = [&](const std::string& file, const std::string& expected) {
        const auto path = root / file;
        if (!std::filesystem::exists(path)) throw std::runtime_error("missing input file " + path.string());
        if (!expected.empty() && hex64(file_checksum(path)) != expected)
            throw std::runtime_error("checksum mismatch for " + path.string());
        return path;
    };
    Benchmark b;
    b.name = m.name;
    auto base = load_fvecs(check(m.base_file, m.base_checksum));
    b.base = std::make_shared<const Dataset>(std::move(base), m.metric);
    b.queries = load_fvecs(check(m.queries_file, m.queries_checksum));
    if (b.queries.cols != b.base->dim()) throw std::runtime_error("queries and base differ in dimension");
    const auto gt_path = root / m.groundtruth_file;
    if (std::filesystem::exists(gt_path)) {
        b.ground_truth = load_ivecs(check(m.groundtruth_file, m.groundtruth_checksum));
        if (b.ground_truth.rows != b.queries.rows)
            throw std::runtime_error("ground truth has " + std::to_string(b.ground_truth.rows) +
                                     " rows for " + std::to_string(b.queries.rows) + " queries");
        b.relevant = relevance_from_truth(b.ground_truth, m.relevant_m);
    } else if (require_ground_truth) {
        throw std::runtime_error("missing ground truth " + gt_path.string() +
                                 " (run the groundtruth subcommand first)");
    }
    return b;
}

}  // namespace lanekit
