#pragma once

// In-process scatter-gather: M lanes answer one query, a policy decides
// which lanes count, and the counted lanes are merged into one top-k.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "lanekit/core.hpp"
#include "lanekit/index/handle.hpp"
#include "lanekit/metrics.hpp"
#include "lanekit/planner.hpp"
#include "lanekit/prf.hpp"

namespace lanekit {

enum class LaneModeKind { NaiveIdentical, NaiveJitteredEntry, Partitioned };

/// How lanes obtain candidates. The dedication fraction of the partitioned
/// mode is the one carried by the PartitionConfig.
struct LaneMode {
    LaneModeKind kind = LaneModeKind::Partitioned;

    static LaneMode naive_identical() { return {LaneModeKind::NaiveIdentical}; }
    static LaneMode naive_jittered_entry() { return {LaneModeKind::NaiveJitteredEntry}; }
    static LaneMode partitioned() { return {LaneModeKind::Partitioned}; }

    bool naive() const { return kind != LaneModeKind::Partitioned; }

    std::string name() const {
        switch (kind) {
            case LaneModeKind::NaiveIdentical: return "naive";
            case LaneModeKind::NaiveJitteredEntry: return "jittered";
            case LaneModeKind::Partitioned: return "partitioned";
        }
        return "?";
    }

    static LaneMode from_string(const std::string& s) {
        if (s == "naive" || s == "naive_identical") return naive_identical();
        if (s == "jittered" || s == "naive_jittered_entry") return naive_jittered_entry();
        if (s == "partitioned") return partitioned();
        throw std::invalid_argument("unknown lane mode: " + s);
    }

    friend bool operator==(const LaneMode&, const LaneMode&) = default;
};

/// Simulated per-lane arrival delays: fixed + exponential jitter, drawn from
/// a stream keyed by (seed, query seed). An explicit list overrides both.
struct DelayModel {
    double fixed_ms = 0.0;
    double mean_jitter_ms = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> explicit_ms;

    std::vector<double> sample(std::size_t lanes, std::uint64_t query_seed) const {
        if (!explicit_ms.empty()) {
            if (explicit_ms.size() != lanes)
                throw std::invalid_argument("DelayModel: explicit delays must have one entry per lane");
            for (double d : explicit_ms)
                if (!(d >= 0.0)) throw std::invalid_argument("DelayModel: delays must be non-negative");
            return explicit_ms;
        }
        if (fixed_ms < 0.0 || mean_jitter_ms < 0.0)
            throw std::invalid_argument("DelayModel: delays must be non-negative");
        SplitMix64 rng(splitmix64_mix(seed ^ query_seed));
        std::vector<double> out(lanes);
        for (auto& d : out) d = fixed_ms + mean_jitter_ms * -std::log(rng.next_unit());
        return out;
    }
};

enum class StragglerKind { WaitAll, FirstKArrivals, TimeBoxedBackfill };

struct StragglerPolicy {
    StragglerKind kind = StragglerKind::WaitAll;
    std::size_t k = 0;          // FirstKArrivals target distinct count
    double deadline_ms = 0.0;   // TimeBoxedBackfill cutoff
    DelayModel delays;

    static StragglerPolicy wait_all() { return {}; }
    static StragglerPolicy first_k_arrivals(std::size_t k) {
        StragglerPolicy p;
        p.kind = StragglerKind::FirstKArrivals;
        p.k = k;
        return p;
    }
    static StragglerPolicy time_boxed_backfill(double deadline_ms) {
        StragglerPolicy p;
        p.kind = StragglerKind::TimeBoxedBackfill;
        p.deadline_ms = deadline_ms;
        return p;
    }

    std::string name() const {
        switch (kind) {
            case StragglerKind::WaitAll: return "wait_all";
            case StragglerKind::FirstKArrivals: return "first_k";
            case StragglerKind::TimeBoxedBackfill: return "time_boxed";
        }
        return "?";
    }
};

/// IVF partitioned lanes either split the probed lists (default) or split a
/// document pool taken from those lists like the other index families.
enum class IvfRouting { Lists, Documents };

struct LaneOptions {
    /// Lists each naive IVF lane probes at minimum; the partitioned pool
    /// covers at least M times this many.
    std::size_t nprobe_per_lane = 1;
    IvfRouting ivf_routing = IvfRouting::Lists;
    BackfillStyle backfill = BackfillStyle::SharedSuffix;
    /// Run lanes on their own threads. Results are identical either way.
    bool threaded = false;
    /// Seed for the jittered-entry start nodes.
    std::uint64_t jitter_seed = 0x5EED;
};

struct QueryOutcome {
    std::uint64_t query_id = 0;
    LaneMode mode;
    double alpha = 0.0;
    MergedResult merged;
    std::vector<LaneResult> per_lane;
    std::vector<LaneId> lanes_counted;  // ascending
    std::vector<double> delays_ms;      // one per lane
    double completion_ms = 0.0;
    std::vector<ScoredId> backfilled;
    /// Scored candidates at pool positions >= M*k_ded, in pool order; only
    /// populated for partitioned runs.
    std::vector<ScoredId> backfill_source;
    std::vector<LaneAssignment> assignments;
    CostCounters pool_cost;
    CostCounters total_cost;
    std::size_t k = 0;

    nlohmann::json to_json() const {
        nlohmann::json lanes = nlohmann::json::array();
        for (const auto& l : per_lane)
            lanes.push_back({{"lane_id", l.lane_id},
                             {"ids", l.ids()},
                             {"cost", l.cost.to_json()},
                             {"wall_ns", l.wall_time.count()}});
        return {{"query_id", query_id},
                {"mode", mode.name()},
                {"alpha", alpha},
                {"lanes", lanes},
                {"lanes_counted", lanes_counted},
                {"union_size", merged.union_size},
                {"rho", merged.overlap_rho},
                {"topk", merged.topk_ids()},
                {"backfilled", ids_of(backfilled)},
                {"pool_cost", pool_cost.to_json()},
                {"cost", total_cost.to_json()},
                {"delays_ms", delays_ms},
                {"completion_ms", completion_ms}};
    }
};

/// Deduplicating merge of the counted lanes (plus any backfill). Overlap is
/// the Jaccard coefficient of the counted lanes' sets.
inline MergedResult merge_lanes(std::span<const LaneResult> lanes, std::span<const LaneId> counted,
                                std::size_t k, std::span<const ScoredId> extra = {}) {
    std::vector<ScoredId> all;
    std::vector<std::vector<CandidateId>> sets;
    for (LaneId r : counted) {
        const auto& lane = lanes[r];
        all.insert(all.end(), lane.selected.begin(), lane.selected.end());
        sets.push_back(lane.ids());
    }
    all.insert(all.end(), extra.begin(), extra.end());
    std::sort(all.begin(), all.end(), ranks_before);

    MergedResult m;
    std::unordered_set<CandidateId> seen;
    for (const auto& s : all)
        if (seen.insert(s.id).second && m.topk.size() < k) m.topk.push_back(s);
    m.union_ids.assign(seen.begin(), seen.end());
    std::sort(m.union_ids.begin(), m.union_ids.end());
    m.union_size = m.union_ids.size();

    bool any = false;
    for (const auto& s : sets) any = any || !s.empty();
    m.overlap_rho = any ? jaccard_overlap(std::span<const std::vector<CandidateId>>(sets)) : 0.0;
    return m;
}

inline MergedResult merge_lanes(std::span<const LaneResult> lanes, std::size_t k) {
    std::vector<LaneId> all(lanes.size());
    std::iota(all.begin(), all.end(), LaneId{0});
    return merge_lanes(lanes, all, k);
}

/// Applies a straggler policy to lanes that have all finished executing.
/// Arrival order is (delay, lane id).
inline QueryOutcome simulate_stragglers(QueryOutcome out, const StragglerPolicy& policy,
                                        std::vector<double> delays) {
    const std::size_t M = out.per_lane.size();
    if (delays.size() != M) throw std::invalid_argument("simulate_stragglers: one delay per lane");
    for (double d : delays)
        if (!(d >= 0.0)) throw std::invalid_argument("simulate_stragglers: negative delay");

    std::vector<LaneId> order(M);
    std::iota(order.begin(), order.end(), LaneId{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](LaneId a, LaneId b) { return delays[a] < delays[b]; });

    std::vector<LaneId> counted;
    double completion = 0.0;
    std::vector<ScoredId> backfilled;
    switch (policy.kind) {
        case StragglerKind::WaitAll:
            counted = order;
            for (double d : delays) completion = std::max(completion, d);
            break;
        case StragglerKind::FirstKArrivals: {
            std::unordered_set<CandidateId> distinct;
            for (LaneId r : order) {
                counted.push_back(r);
                completion = delays[r];
                for (const auto& s : out.per_lane[r].selected) distinct.insert(s.id);
                if (distinct.size() >= policy.k) break;
            }
            break;
        }
        case StragglerKind::TimeBoxedBackfill: {
            for (LaneId r : order)
                if (delays[r] <= policy.deadline_ms) counted.push_back(r);
            completion = counted.size() == M && M > 0 ? delays[order.back()] : policy.deadline_ms;
            std::unordered_set<CandidateId> distinct;
            for (LaneId r : counted)
                for (const auto& s : out.per_lane[r].selected) distinct.insert(s.id);
            for (const auto& s : out.backfill_source) {
                if (distinct.size() >= out.k) break;
                if (distinct.insert(s.id).second) backfilled.push_back(s);
            }
            break;
        }
    }
    std::sort(counted.begin(), counted.end());

    out.lanes_counted = counted;
    out.delays_ms = std::move(delays);
    out.completion_ms = completion;
    out.backfilled = std::move(backfilled);
    out.merged = merge_lanes(out.per_lane, out.lanes_counted, out.k, out.backfilled);
    out.total_cost = out.pool_cost;
    for (const auto& l : out.per_lane) out.total_cost += l.cost;
    out.total_cost.vectors_scored += out.backfilled.size();
    return out;
}

namespace detail {

template <class F>
void run_lanes(std::size_t lanes, bool threaded, std::vector<LaneResult>& results, F&& body) {
    results.assign(lanes, {});
    auto one = [&](LaneId r) {
        const auto t0 = std::chrono::steady_clock::now();
        results[r] = body(r);
        results[r].lane_id = r;
        results[r].wall_time = std::chrono::steady_clock::now() - t0;
    };
    if (threaded && lanes > 1) {
        std::vector<std::exception_ptr> errors(lanes);
        {
            std::vector<std::jthread> pool;
            for (LaneId r = 0; r < lanes; ++r)
                pool.emplace_back([&, r] {
                    try {
                        one(r);
                    } catch (...) {
                        errors[r] = std::current_exception();
                    }
                });
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    } else {
        for (LaneId r = 0; r < lanes; ++r) one(r);
    }
}

inline std::vector<ScoredId> rescore(const Dataset& ds, std::span<const float> query,
                                     std::span<const CandidateId> ids) {
    std::vector<ScoredId> out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back({id, ds.distance_to(query, id)});
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

/// Probe set of a partitioned IVF query: lists covering `candidates`
/// vectors, at least `lanes * nprobe` of them, trimmed to a multiple of lanes.
inline std::vector<ListId> partition_probe_lists(const IvfFlatIndex& ivf, std::span<const float> query,
                                                 std::size_t candidates, std::size_t lanes,
                                                 std::size_t nprobe) {
    if (ivf.nlist() < lanes) throw std::invalid_argument("IVF partitioning needs nlist >= M");
    auto lists = ivf_cover_lists(ivf, query, candidates, lanes * nprobe, lanes);
    lists.resize(lists.size() / lanes * lanes);
    return lists;
}

/// One lane's plain search with budget k_lane.
inline SearchResult naive_lane_search(const IndexHandle& index, std::span<const float> query,
                                      std::size_t k_lane, const LaneOptions& opts,
                                      std::optional<std::uint32_t> start = std::nullopt) {
    if (const auto* bf = index.brute_force()) return bf->search(query, k_lane);
    if (const auto* h = index.hnsw())
        return start ? h->search_from(query, *start, k_lane, k_lane) : h->search(query, k_lane, k_lane);
    const auto& ivf = *index.ivf();
    auto lists = ivf_cover_lists(ivf, query, k_lane, opts.nprobe_per_lane);
    auto r = ivf.search_lists(query, lists, k_lane);
    return r;
}

}  // namespace detail

/// Executes all lanes for one query and applies the straggler policy.
/// `cfg.query_seed()` keys both the PRF and the simulated delays.
inline QueryOutcome run_query(const IndexHandle& index, std::span<const float> query,
                              const PartitionConfig& cfg, LaneMode mode,
                              const StragglerPolicy& policy, std::size_t k,
                              const LaneOptions& opts = {}, std::uint64_t query_id = 0) {
    if (k < 1 || k > cfg.k_total())
        throw std::invalid_argument("run_query: need 1 <= k <= k_total");
    const auto& ds = index.dataset();
    ds.check_query(query);
    const std::size_t M = cfg.lanes();
    const std::size_t k_lane = cfg.k_lane();
    const PrfKey key{cfg.query_seed()};

    QueryOutcome out;
    out.query_id = query_id;
    out.mode = mode;
    out.alpha = mode.naive() ? 0.0 : cfg.alpha();
    out.k = k;

    if (mode.naive()) {
        std::vector<std::optional<std::uint32_t>> starts(M);
        if (mode.kind == LaneModeKind::NaiveJitteredEntry && index.hnsw()) {
            SplitMix64 rng(splitmix64_mix(opts.jitter_seed ^ cfg.query_seed()));
            for (LaneId r = 1; r < M; ++r) starts[r] = static_cast<std::uint32_t>(rng.next() % ds.size());
        }
        detail::run_lanes(M, opts.threaded, out.per_lane, [&](LaneId r) {
            auto s = detail::naive_lane_search(index, query, k_lane, opts, starts[r]);
            return LaneResult{r, std::move(s.hits), s.cost, {}};
        });
    } else if (index.ivf() && opts.ivf_routing == IvfRouting::Lists) {
        // Partition the probed lists; every lane scans its own slice.
        const auto& ivf = *index.ivf();
        const auto t0 = std::chrono::steady_clock::now();
        auto lists = detail::partition_probe_lists(ivf, query, cfg.pool_size(), M, opts.nprobe_per_lane);
        const std::size_t per_lane = lists.size() / M;
        std::vector<CandidateId> list_pool(lists.begin(), lists.end());
        auto permuted = permute_pool(list_pool, key);
        const PartitionConfig list_cfg(M, per_lane, cfg.alpha(), permuted.size(), cfg.query_seed());
        out.assignments.resize(M);
        for (LaneId r = 0; r < M; ++r)
            out.assignments[r] = alpha_partition(permuted, list_cfg, r, opts.backfill);
        out.pool_cost.planner_time = std::chrono::steady_clock::now() - t0;

        detail::run_lanes(M, opts.threaded, out.per_lane, [&](LaneId r) {
            std::vector<ListId> mine(out.assignments[r].selected_ids.begin(),
                                     out.assignments[r].selected_ids.end());
            auto s = ivf.search_lists(query, mine, k_lane);
            return LaneResult{r, std::move(s.hits), s.cost, {}};
        });
        if (policy.kind == StragglerKind::TimeBoxedBackfill) {
            for (std::size_t pos = M * list_cfg.k_ded(); pos < permuted.size(); ++pos) {
                const auto l = static_cast<ListId>(permuted[pos]);
                auto ids = ivf.list(l);
                auto scored = detail::rescore(ds, query, std::vector<CandidateId>(ids.begin(), ids.end()));
                out.backfill_source.insert(out.backfill_source.end(), scored.begin(), scored.end());
            }
        }
    } else {
        // Document pool: enumerate once, permute, partition, rescore.
        CandidatePool pool;
        if (const auto* ivf = index.ivf()) {
            auto lists = detail::partition_probe_lists(*ivf, query, cfg.pool_size(), M, opts.nprobe_per_lane);
            auto s = ivf->search_lists(query, lists, cfg.pool_size());
            if (s.hits.size() < cfg.pool_size())
                throw std::runtime_error("run_query: IVF lists hold fewer than K_pool vectors");
            pool.docs = std::move(s.hits);
            pool.lists = std::move(lists);
            pool.cost = s.cost;
        } else {
            pool = enumerate_pool(index, query, cfg.pool_size());
        }
        out.pool_cost = pool.cost;
        const auto t0 = std::chrono::steady_clock::now();
        auto permuted = permute_pool(pool.ids(), key);
        out.assignments.resize(M);
        for (LaneId r = 0; r < M; ++r) out.assignments[r] = alpha_partition(permuted, cfg, r, opts.backfill);
        out.pool_cost.planner_time = std::chrono::steady_clock::now() - t0;

        detail::run_lanes(M, opts.threaded, out.per_lane, [&](LaneId r) {
            LaneResult lr;
            lr.selected = detail::rescore(ds, query, out.assignments[r].selected_ids);
            lr.cost.vectors_scored = lr.selected.size();
            return lr;
        });
        if (policy.kind == StragglerKind::TimeBoxedBackfill) {
            std::vector<CandidateId> tail(permuted.begin() + static_cast<std::ptrdiff_t>(M * cfg.k_ded()),
                                          permuted.end());
            for (auto id : tail) out.backfill_source.push_back({id, ds.distance_to(query, id)});
        }
    }

    auto delays = policy.delays.sample(M, cfg.query_seed());
    return simulate_stragglers(std::move(out), policy, std::move(delays));
}

/// The equal-cost ceiling: one search with the whole budget. For IVF the
/// probe set is the one a `lanes`-lane partitioned run would cover.
inline QueryOutcome run_single_baseline(const IndexHandle& index, std::span<const float> query,
                                        std::size_t k_total, std::size_t k, std::size_t lanes = 1,
                                        const LaneOptions& opts = {}, std::uint64_t query_id = 0) {
    if (k < 1 || k > k_total) throw std::invalid_argument("run_single_baseline: need 1 <= k <= k_total");
    if (lanes < 1) throw std::invalid_argument("run_single_baseline: lanes must be >= 1");
    QueryOutcome out;
    out.query_id = query_id;
    out.mode = LaneMode::naive_identical();
    out.k = k;
    SearchResult s;
    if (const auto* bf = index.brute_force()) {
        s = bf->search(query, k_total);
    } else if (const auto* h = index.hnsw()) {
        s = h->search(query, k_total, k_total);
    } else {
        const auto& ivf = *index.ivf();
        auto lists = detail::partition_probe_lists(ivf, query, k_total, lanes, opts.nprobe_per_lane);
        s = ivf.search_lists(query, lists, k_total);
    }
    out.per_lane.push_back(LaneResult{0, std::move(s.hits), s.cost, {}});
    return simulate_stragglers(std::move(out), StragglerPolicy::wait_all(), {0.0});
}

class OutcomeLogWriter {
public:
    explicit OutcomeLogWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path);
    }
    void write(const QueryOutcome& o) { out_ << o.to_json().dump() << '\n'; }

private:
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Planner microbenchmark

struct MicrobenchRow {
    std::size_t k_total = 0;
    std::size_t trials = 0;
    double mean_us = 0.0;
    double p50_us = 0.0;
    double p95_us = 0.0;
};

struct MicrobenchReport {
    std::size_t lanes = 0;
    std::vector<MicrobenchRow> rows;
    double slope_us_per_candidate = 0.0;
    double intercept_us = 0.0;
    double r_squared = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& row : rows)
            r.push_back({{"k_total", row.k_total},
                         {"trials", row.trials},
                         {"mean_us", row.mean_us},
                         {"p50_us", row.p50_us},
                         {"p95_us", row.p95_us},
                         {"p95_over_p50", row.p50_us > 0 ? row.p95_us / row.p50_us : 0.0}});
        return {{"M", lanes},
                {"rows", r},
                {"slope_us_per_candidate", slope_us_per_candidate},
                {"intercept_us", intercept_us},
                {"r_squared", r_squared}};
    }
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need >= 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r_squared = sxx > 0 && syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

/// Times permute_pool + M alpha_partition calls + merge of pre-scored lane
/// outputs, at alpha = 1 and K_pool = k_total, for each k_total in `grid`.
inline MicrobenchReport planner_microbenchmark(std::size_t lanes = 4,
                                               std::vector<std::size_t> grid = {16, 32, 64, 128, 256},
                                               std::size_t trials = 10000, std::size_t warmup = 1000,
                                               std::uint64_t seed = 1) {
    if (trials < 1) throw std::invalid_argument("planner_microbenchmark: trials must be >= 1");
    MicrobenchReport rep;
    rep.lanes = lanes;
    SplitMix64 rng(seed);
    volatile std::size_t sink = 0;
    for (std::size_t k_total : grid) {
        if (k_total % lanes != 0)
            throw std::invalid_argument("planner_microbenchmark: k_total must be a multiple of M");
        const PartitionConfig cfg(lanes, k_total / lanes, 1.0, k_total);
        std::vector<CandidateId> pool(k_total);
        std::vector<double> samples;
        samples.reserve(trials);
        std::vector<LaneResult> results(lanes);
        for (std::size_t t = 0; t < warmup + trials; ++t) {
            for (auto& id : pool) id = rng.next() >> 12;
            const PrfKey key{rng.next()};
            const auto t0 = std::chrono::steady_clock::now();
            auto permuted = permute_pool(pool, key);
            for (LaneId r = 0; r < lanes; ++r) {
                auto a = alpha_partition(permuted, cfg, r);
                auto& sel = results[r].selected;
                sel.clear();
                for (auto id : a.selected_ids)
                    sel.push_back({id, static_cast<float>(splitmix64_finalize(id) >> 40)});
            }
            auto merged = merge_lanes(results, k_total);
            const auto t1 = std::chrono::steady_clock::now();
            sink = sink + merged.union_size;
            if (t >= warmup) samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
        }
        MicrobenchRow row;
        row.k_total = k_total;
        row.trials = trials;
        row.mean_us = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(trials);
        std::sort(samples.begin(), samples.end());
        auto pct = [&](double p) {
            const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(trials))) - 1;
            return samples[std::min(idx, trials - 1)];
        };
        row.p50_us = pct(0.50);
        row.p95_us = pct(0.95);
        rep.rows.push_back(row);
    }
    if (rep.rows.size() >= 2) {
        std::vector<double> x, y;
        for (const auto& r : rep.rows) {
            x.push_back(static_cast<double>(r.k_total));
            y.push_back(r.mean_us);
        }
        auto fit = least_squares(x, y);
        rep.slope_us_per_candidate = fit.slope;
        rep.intercept_us = fit.intercept;
        rep.r_squared = fit.r_squared;
    }
    return rep;
}

}  // namespace lanekit
