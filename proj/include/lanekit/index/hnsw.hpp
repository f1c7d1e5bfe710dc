#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "lanekit/core.hpp"
#include "lanekit/index/brute_force.hpp"
#include "lanekit/index/dataset.hpp"
#include "lanekit/prf.hpp"

namespace lanekit {

struct HnswParams {
    std::size_t graph_degree = 16;  ///< links per node on upper layers; layer 0 allows twice this
    std::size_t ef_construction = 100;
    std::uint64_t seed = 42;

    friend bool operator==(const HnswParams&, const HnswParams&) = default;
};

namespace detail {

struct ByRankAsc {
    bool operator()(const ScoredId& a, const ScoredId& b) const { return ranks_before(b, a); }
};
struct ByRankDesc {
    bool operator()(const ScoredId& a, const ScoredId& b) const { return ranks_before(a, b); }
};

class VisitedSet {
public:
    explicit VisitedSet(std::size_t n) : tags_(n, 0) {}

    void reset() {
        if (++epoch_ == 0) {
            std::fill(tags_.begin(), tags_.end(), 0);
            epoch_ = 1;
        }
    }
    /// Returns true if `id` was not yet visited in this epoch.
    bool insert(std::size_t id) {
        if (tags_[id] == epoch_) return false;
        tags_[id] = epoch_;
        return true;
    }

private:
    std::vector<std::uint32_t> tags_;
    std::uint32_t epoch_ = 1;
};

}  // namespace detail

/// Hierarchical navigable small-world graph, single-threaded build.
///
/// Neighbors are chosen with the standard diversity heuristic (no candidate
/// extension, no kept pruned connections). After construction every node is
/// made reachable from the entry point on layer 0. Search descends greedily
/// through the upper layers and runs one beam search on layer 0, seeded with
/// the descent result and the global entry point.
class HnswLiteIndex {
public:
    using Links = std::vector<std::vector<std::vector<std::uint32_t>>>;  // [node][layer]

    static HnswLiteIndex build(std::shared_ptr<const Dataset> ds, HnswParams params) {
        if (!ds) throw std::invalid_argument("hnsw_build: null dataset");
        if (ds->size() < 1) throw std::invalid_argument("hnsw_build: empty dataset");
        if (params.graph_degree < 2) throw std::invalid_argument("hnsw_build: graph_degree < 2");
        if (params.ef_construction < 1) throw std::invalid_argument("hnsw_build: ef_construction < 1");
        if (ds->size() > UINT32_MAX) throw std::invalid_argument("hnsw_build: too many vectors");

        HnswLiteIndex idx(std::move(ds), params);
        const std::size_t n = idx.ds_->size();
        const double level_scale = 1.0 / std::log(static_cast<double>(params.graph_degree));
        SplitMix64 rng(params.seed);
        idx.levels_.resize(n);
        idx.links_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = rng.next_unit();
            idx.levels_[i] = std::min(kMaxLevel, static_cast<int>(-std::log(u) * level_scale));
            idx.links_[i].resize(static_cast<std::size_t>(idx.levels_[i]) + 1);
        }

        detail::VisitedSet visited(n);
        for (std::size_t i = 0; i < n; ++i) idx.insert(static_cast<std::uint32_t>(i), visited);
        idx.repair_reachability(visited);
        return idx;
    }

    /// Rebuilds an index from persisted parts; validates shape only.
    static HnswLiteIndex from_parts(std::shared_ptr<const Dataset> ds, HnswParams params,
                                    std::vector<int> levels, Links links, std::uint32_t entry) {
        if (!ds) throw std::invalid_argument("HnswLiteIndex: null dataset");
        if (levels.size() != ds->size() || links.size() != ds->size())
            throw std::invalid_argument("HnswLiteIndex: part sizes do not match dataset");
        HnswLiteIndex idx(std::move(ds), params);
        idx.levels_ = std::move(levels);
        idx.links_ = std::move(links);
        if (entry >= idx.levels_.size()) throw std::invalid_argument("HnswLiteIndex: bad entry point");
        idx.entry_ = entry;
        idx.max_level_ = idx.levels_[entry];
        for (std::size_t i = 0; i < idx.links_.size(); ++i) {
            if (idx.links_[i].size() != static_cast<std::size_t>(idx.levels_[i]) + 1)
                throw std::invalid_argument("HnswLiteIndex: layer count mismatch");
            for (const auto& layer : idx.links_[i])
                for (auto nb : layer)
                    if (nb >= idx.links_.size())
                        throw std::invalid_argument("HnswLiteIndex: neighbor id out of range");
        }
        return idx;
    }

    SearchResult search(std::span<const float> query, std::size_t ef_search, std::size_t k) const {
        check_search(query, ef_search, k);
        SearchResult r;
        ScoredId cur{entry_, ds_->distance_to(query, entry_)};
        ++r.cost.node_visits;
        const ScoredId entry = cur;
        for (int layer = max_level_; layer > 0; --layer)
            cur = greedy_descent(query, cur, layer, r.cost);
        std::vector<ScoredId> seeds{cur};
        if (cur.id != entry.id) seeds.push_back(entry);
        detail::VisitedSet visited(ds_->size());
        r.hits = search_layer(query, seeds, ef_search, 0, visited, r.cost);
        if (r.hits.size() > k) r.hits.resize(k);
        return r;
    }

    /// Layer-0 beam search from an arbitrary start node, skipping the descent.
    SearchResult search_from(std::span<const float> query, std::uint32_t start,
                             std::size_t ef_search, std::size_t k) const {
        check_search(query, ef_search, k);
        if (start >= ds_->size()) throw std::invalid_argument("hnsw search_from: bad start node");
        SearchResult r;
        std::vector<ScoredId> seeds{{start, ds_->distance_to(query, start)}};
        ++r.cost.node_visits;
        detail::VisitedSet visited(ds_->size());
        r.hits = search_layer(query, seeds, ef_search, 0, visited, r.cost);
        if (r.hits.size() > k) r.hits.resize(k);
        return r;
    }

    const Dataset& dataset() const { return *ds_; }
    std::shared_ptr<const Dataset> dataset_ptr() const { return ds_; }
    const HnswParams& params() const { return params_; }
    std::size_t size() const { return ds_->size(); }
    std::uint32_t entry_point() const { return entry_; }
    int max_level() const { return max_level_; }
    const std::vector<int>& levels() const { return levels_; }
    const Links& links() const { return links_; }

    std::span<const std::uint32_t> neighbors(std::size_t node, int layer) const {
        return links_.at(node).at(static_cast<std::size_t>(layer));
    }

    std::size_t max_degree(int layer) const {
        return layer == 0 ? 2 * params_.graph_degree : params_.graph_degree;
    }

    /// Nodes reachable from the entry point following layer-0 out-links.
    std::vector<bool> reachable_from_entry() const {
        std::vector<bool> seen(size(), false);
        std::vector<std::uint32_t> stack{entry_};
        seen[entry_] = true;
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            for (auto v : links_[u][0])
                if (!seen[v]) {
                    seen[v] = true;
                    stack.push_back(v);
                }
        }
        return seen;
    }

private:
    static constexpr int kMaxLevel = 16;

    HnswLiteIndex(std::shared_ptr<const Dataset> ds, HnswParams params)
        : ds_(std::move(ds)), params_(params) {}

    void check_search(std::span<const float> query, std::size_t ef, std::size_t k) const {
        if (ds_->size() == 0) throw std::invalid_argument("hnsw_search: empty index");
        ds_->check_query(query);
        if (k > ef) throw std::invalid_argument("hnsw_search: k must not exceed ef_search");
    }

    float node_distance(std::uint32_t a, std::uint32_t b) const {
        return distance(ds_->metric(), ds_->row(a), ds_->row(b));
    }

    ScoredId greedy_descent(std::span<const float> query, ScoredId cur, int layer,
                            CostCounters& cost) const {
        bool changed = true;
        while (changed) {
            changed = false;
            for (auto nb : links_[cur.id][static_cast<std::size_t>(layer)]) {
                ScoredId cand{nb, ds_->distance_to(query, nb)};
                ++cost.node_visits;
                if (ranks_before(cand, cur)) {
                    cur = cand;
                    changed = true;
                }
            }
        }
        return cur;
    }

    /// Beam search on one layer. Returns up to `ef` nodes in rank order.
    std::vector<ScoredId> search_layer(std::span<const float> query,
                                       const std::vector<ScoredId>& seeds, std::size_t ef,
                                       int layer, detail::VisitedSet& visited,
                                       CostCounters& cost) const {
        std::priority_queue<ScoredId, std::vector<ScoredId>, detail::ByRankAsc> frontier;
        std::priority_queue<ScoredId, std::vector<ScoredId>, detail::ByRankDesc> best;
        for (const auto& s : seeds) {
            if (!visited.insert(s.id)) continue;
            frontier.push(s);
            best.push(s);
            if (best.size() > ef) best.pop();
        }
        while (!frontier.empty()) {
            const ScoredId c = frontier.top();
            if (best.size() >= ef && ranks_before(best.top(), c)) break;
            frontier.pop();
            for (auto nb : links_[c.id][static_cast<std::size_t>(layer)]) {
                if (!visited.insert(nb)) continue;
                ScoredId s{nb, ds_->distance_to(query, nb)};
                ++cost.node_visits;
                if (best.size() < ef || ranks_before(s, best.top())) {
                    frontier.push(s);
                    best.push(s);
                    if (best.size() > ef) best.pop();
                }
            }
        }
        std::vector<ScoredId> out(best.size());
        for (std::size_t i = out.size(); i-- > 0;) {
            out[i] = best.top();
            best.pop();
        }
        return out;
    }

    /// Diversity heuristic: keep a candidate only if it is closer to the base
    /// than to every neighbor already kept. `candidates` is in rank order.
    std::vector<std::uint32_t> select_neighbors(const std::vector<ScoredId>& candidates,
                                                std::size_t m) const {
        std::vector<std::uint32_t> kept;
        kept.reserve(m);
        for (const auto& c : candidates) {
            if (kept.size() >= m) break;
            bool diverse = true;
            for (auto r : kept) {
                if (node_distance(static_cast<std::uint32_t>(c.id), r) < c.distance) {
                    diverse = false;
                    break;
                }
            }
            if (diverse) kept.push_back(static_cast<std::uint32_t>(c.id));
        }
        return kept;
    }

    void shrink(std::uint32_t node, int layer) {
        auto& list = links_[node][static_cast<std::size_t>(layer)];
        std::vector<ScoredId> cands;
        cands.reserve(list.size());
        for (auto nb : list) cands.push_back({nb, node_distance(node, nb)});
        std::sort(cands.begin(), cands.end(), ranks_before);
        list = select_neighbors(cands, max_degree(layer));
    }

    void insert(std::uint32_t id, detail::VisitedSet& visited) {
        if (id == 0) {
            entry_ = 0;
            max_level_ = levels_[0];
            return;
        }
        const auto query = ds_->row(id);
        const int level = levels_[id];
        CostCounters scratch;
        ScoredId cur{entry_, ds_->distance_to(query, entry_)};
        for (int layer = max_level_; layer > level; --layer)
            cur = greedy_descent(query, cur, layer, scratch);

        std::vector<ScoredId> seeds{cur};
        for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
            visited.reset();
            auto found = search_layer(query, seeds, params_.ef_construction, layer, visited, scratch);
            auto chosen = select_neighbors(found, params_.graph_degree);
            links_[id][static_cast<std::size_t>(layer)] = chosen;
            for (auto nb : chosen) {
                auto& back = links_[nb][static_cast<std::size_t>(layer)];
                back.push_back(id);
                if (back.size() > max_degree(layer)) shrink(nb, layer);
            }
            seeds = std::move(found);
        }
        if (level > max_level_) {
            entry_ = id;
            max_level_ = level;
        }
    }

    /// Adds one incoming layer-0 edge to every node the entry point cannot
    /// reach, taken from the closest reachable node with spare degree.
    void repair_reachability(detail::VisitedSet& visited) {
        auto seen = reachable_from_entry();
        auto mark_from = [&](std::uint32_t start) {
            std::vector<std::uint32_t> stack{start};
            seen[start] = true;
            while (!stack.empty()) {
                auto u = stack.back();
                stack.pop_back();
                for (auto v : links_[u][0])
                    if (!seen[v]) {
                        seen[v] = true;
                        stack.push_back(v);
                    }
            }
        };
        for (std::uint32_t u = 0; u < seen.size(); ++u) {
            if (seen[u]) continue;
            CostCounters scratch;
            visited.reset();
            std::vector<ScoredId> seeds{{entry_, ds_->distance_to(ds_->row(u), entry_)}};
            auto near = search_layer(ds_->row(u), seeds, params_.ef_construction, 0, visited, scratch);
            std::uint32_t donor = UINT32_MAX;
            for (const auto& c : near) {
                if (links_[c.id][0].size() < max_degree(0)) {
                    donor = static_cast<std::uint32_t>(c.id);
                    break;
                }
            }
            if (donor == UINT32_MAX) {
                std::vector<ScoredId> all;
                for (std::uint32_t v = 0; v < seen.size(); ++v)
                    if (seen[v] && links_[v][0].size() < max_degree(0))
                        all.push_back({v, node_distance(u, v)});
                if (all.empty())
                    throw std::runtime_error("hnsw_build: no reachable node has spare degree");
                donor = static_cast<std::uint32_t>(
                    std::min_element(all.begin(), all.end(), ranks_before)->id);
            }
            links_[donor][0].push_back(u);
            mark_from(u);
        }
    }

    std::shared_ptr<const Dataset> ds_;
    HnswParams params_;
    std::vector<int> levels_;
    Links links_;
    std::uint32_t entry_ = 0;
    int max_level_ = 0;
};

}  // namespace lanekit
