#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lanekit/core.hpp"
#include "lanekit/index/brute_force.hpp"
#include "lanekit/index/dataset.hpp"
#include "lanekit/index/hnsw.hpp"
#include "lanekit/index/ivf.hpp"

namespace lanekit {

enum class IndexFamily : std::uint32_t { BruteForce = 0, Hnsw = 1, Ivf = 2 };

inline std::string to_string(IndexFamily f) {
    switch (f) {
        case IndexFamily::BruteForce: return "flat";
        case IndexFamily::Hnsw: return "hnsw";
        case IndexFamily::Ivf: return "ivf";
    }
    return "?";
}

inline IndexFamily index_family_from_string(const std::string& s) {
    if (s == "flat" || s == "brute_force" || s == "bruteforce") return IndexFamily::BruteForce;
    if (s == "hnsw") return IndexFamily::Hnsw;
    if (s == "ivf" || s == "ivf_flat") return IndexFamily::Ivf;
    throw std::invalid_argument("unknown index family: " + s);
}

/// One of the three search engines behind a common surface.
class IndexHandle {
public:
    explicit IndexHandle(BruteForceIndex idx) : impl_(std::move(idx)) {}
    explicit IndexHandle(HnswLiteIndex idx) : impl_(std::move(idx)) {}
    explicit IndexHandle(IvfFlatIndex idx) : impl_(std::move(idx)) {}

    IndexFamily family() const { return static_cast<IndexFamily>(impl_.index()); }

    const Dataset& dataset() const {
        return std::visit([](const auto& idx) -> const Dataset& { return idx.dataset(); }, impl_);
    }

    const BruteForceIndex* brute_force() const { return std::get_if<BruteForceIndex>(&impl_); }
    const HnswLiteIndex* hnsw() const { return std::get_if<HnswLiteIndex>(&impl_); }
    const IvfFlatIndex* ivf() const { return std::get_if<IvfFlatIndex>(&impl_); }

private:
    std::variant<BruteForceIndex, HnswLiteIndex, IvfFlatIndex> impl_;
};

/// Nearest lists in centroid order until they hold at least `candidates`
/// vectors and number at least `min_lists`; the count is then rounded up to
/// a multiple of `granularity` (capped at nlist).
inline std::vector<ListId> ivf_cover_lists(const IvfFlatIndex& idx, std::span<const float> query,
                                           std::size_t candidates, std::size_t min_lists = 0,
                                           std::size_t granularity = 1) {
    auto route = idx.route(query);
    std::size_t covered = 0, count = 0;
    while (count < route.lists.size() && (covered < candidates || count < min_lists)) {
        covered += idx.list_size(route.lists[count]);
        ++count;
    }
    if (granularity > 1 && count % granularity != 0)
        count = std::min(route.lists.size(), (count / granularity + 1) * granularity);
    count = std::max<std::size_t>(count, 1);
    route.lists.resize(count);
    return route.lists;
}

/// Per-query candidate pool, in index rank order (not yet PRF-permuted).
struct CandidatePool {
    /// HNSW and brute force: the top-K_pool hits with exact distances.
    /// IVF: every id stored in the covered lists, in list order, unscored.
    std::vector<ScoredId> docs;
    bool docs_scored = true;
    /// IVF only: the covered lists in centroid order.
    std::vector<ListId> lists;
    CostCounters cost;

    std::vector<CandidateId> ids() const { return ids_of(docs); }
};

/// HNSW: top-K_pool of a search with ef_search = K_pool. IVF: nearest lists
/// until K_pool candidates (and `min_lists` lists, rounded up to a multiple
/// of `list_granularity`) are covered. Brute force: exact top-K_pool.
inline CandidatePool enumerate_pool(const IndexHandle& index, std::span<const float> query,
                                    std::size_t pool_size, std::size_t min_lists = 0,
                                    std::size_t list_granularity = 1) {
    const auto& ds = index.dataset();
    ds.check_query(query);
    if (pool_size < 1) throw std::invalid_argument("enumerate_pool: K_pool must be >= 1");
    if (pool_size > ds.size())
        throw std::invalid_argument("enumerate_pool: K_pool=" + std::to_string(pool_size) +
                                    " > N=" + std::to_string(ds.size()));
    CandidatePool pool;
    if (const auto* bf = index.brute_force()) {
        auto r = bf->search(query, pool_size);
        pool.docs = std::move(r.hits);
        pool.cost = r.cost;
    } else if (const auto* h = index.hnsw()) {
        auto r = h->search(query, pool_size, pool_size);
        pool.docs = std::move(r.hits);
        pool.cost = r.cost;
    } else if (const auto* ivf = index.ivf()) {
        pool.lists = ivf_cover_lists(*ivf, query, pool_size, min_lists, list_granularity);
        pool.docs_scored = false;
        for (ListId l : pool.lists)
            for (auto id : ivf->list(l)) pool.docs.push_back({id, 0.0f});
    }
    return pool;
}

}  // namespace lanekit
