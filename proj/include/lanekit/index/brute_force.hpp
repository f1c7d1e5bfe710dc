#pragma once

#include <algorithm>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "lanekit/core.hpp"
#include "lanekit/index/dataset.hpp"

namespace lanekit {

struct SearchResult {
    std::vector<ScoredId> hits;
    CostCounters cost;
};

/// Exact top-k by exhaustive scan. The ground truth for every recall number.
inline std::vector<ScoredId> brute_force_topk(const Dataset& ds, std::span<const float> query,
                                              std::size_t k) {
    ds.check_query(query);
    if (k > ds.size())
        throw std::invalid_argument("brute_force_topk: k=" + std::to_string(k) + " > N=" +
                                    std::to_string(ds.size()));
    std::vector<ScoredId> all(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) all[i] = {i, ds.distance_to(query, i)};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      ranks_before);
    all.resize(k);
    return all;
}

class BruteForceIndex {
public:
    explicit BruteForceIndex(std::shared_ptr<const Dataset> ds) : ds_(std::move(ds)) {
        if (!ds_) throw std::invalid_argument("BruteForceIndex: null dataset");
    }

    const Dataset& dataset() const { return *ds_; }
    std::shared_ptr<const Dataset> dataset_ptr() const { return ds_; }

    SearchResult search(std::span<const float> query, std::size_t k) const {
        SearchResult r;
        r.hits = brute_force_topk(*ds_, query, k);
        r.cost.vectors_scored = ds_->size();
        return r;
    }

private:
    std::shared_ptr<const Dataset> ds_;
};

}  // namespace lanekit
