#pragma once

#include <memory>
#include <random>
#include <vector>

#include "lanekit/lanekit.hpp"

namespace lanekit::testutil {

inline Matrix<float> random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 1.0f);
    Matrix<float> m(rows, cols);
    for (auto& v : m.data) v = g(rng);
    return m;
}

inline std::shared_ptr<const Dataset> random_dataset(std::size_t n, std::size_t d, std::uint64_t seed,
                                                     Metric metric = Metric::L2) {
    auto m = random_matrix(n, d, seed);
    if (metric == Metric::InnerProduct) normalize_rows(m);
    return std::make_shared<const Dataset>(std::move(m), metric);
}

inline std::vector<CandidateId> iota_ids(std::size_t n, CandidateId first = 0) {
    std::vector<CandidateId> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = first + i;
    return v;
}

/// Small clustered benchmark for lane-level tests.
inline Benchmark small_benchmark(std::size_t n = 2000, std::size_t queries = 40, std::uint64_t seed = 3) {
    SyntheticSpec s;
    s.n = n;
    s.dim = 16;
    s.n_clusters = 16;
    s.n_queries = queries;
    s.seed = seed;
    return generate_synthetic(s);
}

}  // namespace lanekit::testutil
