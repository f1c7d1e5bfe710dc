#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "lanekit/core.hpp"
#include "lanekit/index/brute_force.hpp"
#include "lanekit/index/dataset.hpp"
#include "lanekit/prf.hpp"

namespace lanekit {

using ListId = std::uint32_t;

struct IvfParams {
    std::size_t nlist = 128;
    std::size_t train_sample_size = 16384;
    std::uint64_t seed = 42;

    friend bool operator==(const IvfParams&, const IvfParams&) = default;
};

inline constexpr std::size_t kKmeansIterations = 25;

/// Index of the nearest row of `centroids` (squared L2, ties to lower index).
inline std::size_t nearest_centroid(const Matrix<float>& centroids, std::span<const float> v) {
    std::size_t best = 0;
    float best_d = distance(Metric::L2, v, centroids.row(0));
    for (std::size_t c = 1; c < centroids.rows; ++c) {
        const float d = distance(Metric::L2, v, centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

/// Lloyd's k-means with k-means++ seeding, capped at kKmeansIterations.
/// Empty clusters keep their previous centroid.
inline Matrix<float> train_kmeans(const Matrix<float>& sample, std::size_t k, std::uint64_t seed) {
    if (k < 1 || k > sample.rows) throw std::invalid_argument("train_kmeans: need 1 <= k <= samples");
    const std::size_t n = sample.rows, d = sample.cols;
    SplitMix64 rng(seed);

    Matrix<float> centroids(k, d);
    std::vector<bool> taken(n, false);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    auto take = [&](std::size_t c, std::size_t i) {
        taken[i] = true;
        std::copy_n(sample.row(i).begin(), d, centroids.row(c).begin());
        for (std::size_t j = 0; j < n; ++j)
            d2[j] = std::min(d2[j], double(distance(Metric::L2, sample.row(j), sample.row(i))));
    };
    take(0, rng.next() % n);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (!taken[j]) total += d2[j];
        std::size_t pick = n;
        if (total > 0.0) {
            double target = (rng.next_unit()) * total;
            for (std::size_t j = 0; j < n; ++j) {
                if (taken[j]) continue;
                target -= d2[j];
                pick = j;
                if (target <= 0.0 && d2[j] > 0.0) break;
            }
        }
        if (pick == n || taken[pick]) {
            // All remaining points coincide with chosen centroids.
            std::size_t skip = rng.next() % (n - c);
            for (std::size_t j = 0; j < n; ++j)
                if (!taken[j] && skip-- == 0) {
                    pick = j;
                    break;
                }
        }
        take(c, pick);
    }

    std::vector<std::size_t> assign(n, k);
    std::vector<double> sums(k * d);
    std::vector<std::size_t> counts(k);
    for (std::size_t iter = 0; iter < kKmeansIterations; ++iter) {
        bool changed = false;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t c = nearest_centroid(centroids, sample.row(j));
            if (c != assign[j]) {
                assign[j] = c;
                changed = true;
            }
        }
        if (!changed) break;
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t j = 0; j < n; ++j) {
            ++counts[assign[j]];
            auto row = sample.row(j);
            for (std::size_t t = 0; t < d; ++t) sums[assign[j] * d + t] += row[t];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            auto row = centroids.row(c);
            for (std::size_t t = 0; t < d; ++t)
                row[t] = static_cast<float>(sums[c * d + t] / double(counts[c]));
        }
    }
    return centroids;
}

struct ListRoute {
    std::vector<ListId> lists;  // ascending centroid distance, ties by list id
    std::vector<float> centroid_distances;
};

/// IVF-Flat: k-means coarse quantizer plus one inverted list per centroid.
/// Lists store ids and a contiguous copy of their vectors. Lists are routed
/// by squared L2 to the centroid; for unit-normalized inner-product data this
/// is the same order as routing by similarity.
class IvfFlatIndex {
public:
    static IvfFlatIndex build(std::shared_ptr<const Dataset> ds, IvfParams params) {
        if (!ds) throw std::invalid_argument("ivf_build: null dataset");
        const std::size_t n = ds->size();
        if (params.nlist < 1) throw std::invalid_argument("ivf_build: nlist must be >= 1");
        if (params.nlist > n)
            throw std::invalid_argument("ivf_build: nlist=" + std::to_string(params.nlist) +
                                        " exceeds N=" + std::to_string(n));

        std::size_t sample_size = std::min(n, std::max(params.train_sample_size, params.nlist));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        if (sample_size < n) {
            SplitMix64 rng(params.seed ^ 0x5a5a5a5aULL);
            for (std::size_t i = 0; i < sample_size; ++i) {
                const std::size_t j = i + rng.next() % (n - i);
                std::swap(order[i], order[j]);
            }
            order.resize(sample_size);
            std::sort(order.begin(), order.end());
        }
        Matrix<float> sample(sample_size, ds->dim());
        for (std::size_t i = 0; i < sample_size; ++i)
            std::copy_n(ds->row(order[i]).begin(), ds->dim(), sample.row(i).begin());

        auto centroids = train_kmeans(sample, params.nlist, params.seed);
        std::vector<ListId> assignment(n);
        for (std::size_t i = 0; i < n; ++i)
            assignment[i] = static_cast<ListId>(nearest_centroid(centroids, ds->row(i)));
        return from_parts(std::move(ds), params, std::move(centroids), assignment);
    }

    /// Rebuilds lists from centroids plus a per-vector list assignment.
    static IvfFlatIndex from_parts(std::shared_ptr<const Dataset> ds, IvfParams params,
                                   Matrix<float> centroids, std::span<const ListId> assignment) {
        if (!ds) throw std::invalid_argument("IvfFlatIndex: null dataset");
        if (centroids.cols != ds->dim() || centroids.rows != params.nlist)
            throw std::invalid_argument("IvfFlatIndex: centroid shape mismatch");
        if (assignment.size() != ds->size())
            throw std::invalid_argument("IvfFlatIndex: assignment size mismatch");
        for (float v : centroids.data)
            if (!std::isfinite(v)) throw std::invalid_argument("IvfFlatIndex: non-finite centroid");
        IvfFlatIndex idx;
        idx.ds_ = std::move(ds);
        idx.params_ = params;
        idx.centroids_ = std::move(centroids);
        idx.list_ids_.resize(params.nlist);
        idx.list_vectors_.resize(params.nlist);
        for (std::size_t i = 0; i < assignment.size(); ++i) {
            if (assignment[i] >= params.nlist)
                throw std::invalid_argument("IvfFlatIndex: assignment out of range");
            idx.list_ids_[assignment[i]].push_back(i);
            auto row = idx.ds_->row(i);
            auto& vecs = idx.list_vectors_[assignment[i]];
            vecs.insert(vecs.end(), row.begin(), row.end());
        }
        return idx;
    }

    const Dataset& dataset() const { return *ds_; }
    std::shared_ptr<const Dataset> dataset_ptr() const { return ds_; }
    const IvfParams& params() const { return params_; }
    std::size_t nlist() const { return params_.nlist; }
    const Matrix<float>& centroids() const { return centroids_; }
    std::span<const CandidateId> list(ListId l) const { return list_ids_.at(l); }
    std::size_t list_size(ListId l) const { return list_ids_.at(l).size(); }

    std::vector<ListId> assignment() const {
        std::vector<ListId> a(ds_->size());
        for (ListId l = 0; l < list_ids_.size(); ++l)
            for (auto id : list_ids_[l]) a[id] = l;
        return a;
    }

    /// All lists ordered by centroid distance to `query`.
    ListRoute route(std::span<const float> query) const {
        ds_->check_query(query);
        std::vector<ScoredId> scored(nlist());
        for (ListId l = 0; l < nlist(); ++l)
            scored[l] = {l, distance(Metric::L2, query, centroids_.row(l))};
        std::sort(scored.begin(), scored.end(), ranks_before);
        ListRoute r;
        r.lists.reserve(scored.size());
        r.centroid_distances.reserve(scored.size());
        for (const auto& s : scored) {
            r.lists.push_back(static_cast<ListId>(s.id));
            r.centroid_distances.push_back(s.distance);
        }
        return r;
    }

    /// Scans exactly `probe_lists` and returns the best min(k, scanned) entries.
    SearchResult search_lists(std::span<const float> query, std::span<const ListId> probe_lists,
                              std::size_t k) const {
        ds_->check_query(query);
        if (probe_lists.empty()) throw std::invalid_argument("ivf_search_lists: empty probe set");
        std::vector<ListId> seen(probe_lists.begin(), probe_lists.end());
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
            throw std::invalid_argument("ivf_search_lists: duplicate list id");
        if (seen.back() >= nlist())
            throw std::invalid_argument("ivf_search_lists: unknown list id " +
                                        std::to_string(seen.back()));

        SearchResult r;
        std::vector<ScoredId> scored;
        const std::size_t d = ds_->dim();
        for (ListId l : probe_lists) {
            const auto& ids = list_ids_[l];
            const auto& vecs = list_vectors_[l];
            ++r.cost.list_scans;
            r.cost.vectors_scored += ids.size();
            for (std::size_t j = 0; j < ids.size(); ++j)
                scored.push_back(
                    {ids[j], distance(ds_->metric(), query, std::span<const float>(vecs.data() + j * d, d))});
        }
        const std::size_t keep = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                          scored.end(), ranks_before);
        scored.resize(keep);
        r.hits = std::move(scored);
        return r;
    }

private:
    IvfFlatIndex() = default;

    std::shared_ptr<const Dataset> ds_;
    IvfParams params_;
    Matrix<float> centroids_;
    std::vector<std::vector<CandidateId>> list_ids_;
    std::vector<std::vector<float>> list_vectors_;
};

}  // namespace lanekit
