#pragma once

// Experiment grid: alpha sweep, pool-size ablation and lane scaling over a
// benchmark, with per-query evaluation spread over threads and results
// stored by query index so aggregates do not depend on scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lanekit/convergence.hpp"
#include "lanekit/datasets.hpp"
#include "lanekit/index/handle.hpp"
#include "lanekit/index/persist.hpp"
#include "lanekit/lanes.hpp"
#include "lanekit/metrics.hpp"
#include "lanekit/planner.hpp"

namespace lanekit {

struct IndexSpec {
    IndexFamily family = IndexFamily::Hnsw;
    std::size_t graph_degree = 16;
    std::size_t ef_construction = 100;
    std::size_t nlist = 128;
    std::size_t train_sample_size = 16384;
    std::size_t nprobe_per_lane = 1;
    IvfRouting ivf_routing = IvfRouting::Lists;

    nlohmann::json to_json() const {
        return {{"family", to_string(family)},
                {"graph_degree", graph_degree},
                {"ef_construction", ef_construction},
                {"nlist", nlist},
                {"train_sample_size", train_sample_size},
                {"nprobe_per_lane", nprobe_per_lane},
                {"ivf_routing", ivf_routing == IvfRouting::Lists ? "lists" : "documents"}};
    }

    static IndexSpec from_json(const nlohmann::json& j) {
        IndexSpec s;
        for (const auto& [key, v] : j.items()) {
            if (key == "family") s.family = index_family_from_string(v.get<std::string>());
            else if (key == "graph_degree") s.graph_degree = v.get<std::size_t>();
            else if (key == "ef_construction") s.ef_construction = v.get<std::size_t>();
            else if (key == "nlist") s.nlist = v.get<std::size_t>();
            else if (key == "train_sample_size") s.train_sample_size = v.get<std::size_t>();
            else if (key == "nprobe_per_lane") s.nprobe_per_lane = v.get<std::size_t>();
            else if (key == "ivf_routing") {
                const auto r = v.get<std::string>();
                if (r == "lists") s.ivf_routing = IvfRouting::Lists;
                else if (r == "documents") s.ivf_routing = IvfRouting::Documents;
                else throw std::invalid_argument("index.ivf_routing must be lists or documents");
            } else throw std::invalid_argument("unknown index key: " + key);
        }
        if (s.nprobe_per_lane < 1) throw std::invalid_argument("index.nprobe_per_lane must be >= 1");
        return s;
    }

    IndexHandle build(std::shared_ptr<const Dataset> ds, std::uint64_t seed) const {
        switch (family) {
            case IndexFamily::BruteForce: return IndexHandle(BruteForceIndex(std::move(ds)));
            case IndexFamily::Hnsw:
                return IndexHandle(HnswLiteIndex::build(std::move(ds), {graph_degree, ef_construction, seed}));
            case IndexFamily::Ivf:
                return IndexHandle(IvfFlatIndex::build(std::move(ds), {nlist, train_sample_size, seed}));
        }
        throw std::logic_error("bad index family");
    }

    LaneOptions lane_options() const {
        LaneOptions o;
        o.nprobe_per_lane = nprobe_per_lane;
        o.ivf_routing = ivf_routing;
        return o;
    }
};

struct PolicySpec {
    StragglerKind kind = StragglerKind::WaitAll;
    std::size_t k = 0;
    double deadline_ms = 0.0;
    double fixed_ms = 0.0;
    double jitter_ms = 0.0;

    StragglerPolicy make(std::uint64_t seed, std::size_t default_k) const {
        StragglerPolicy p;
        p.kind = kind;
        p.k = k ? k : default_k;
        p.deadline_ms = deadline_ms;
        p.delays.fixed_ms = fixed_ms;
        p.delays.mean_jitter_ms = jitter_ms;
        p.delays.seed = seed;
        return p;
    }

    nlohmann::json to_json() const {
        StragglerPolicy named;
        named.kind = kind;
        return {{"kind", named.name()},
                {"k", k},
                {"deadline_ms", deadline_ms},
                {"fixed_ms", fixed_ms},
                {"jitter_ms", jitter_ms}};
    }

    static PolicySpec from_json(const nlohmann::json& j) {
        PolicySpec p;
        for (const auto& [key, v] : j.items()) {
            if (key == "kind") {
                const auto s = v.get<std::string>();
                if (s == "wait_all") p.kind = StragglerKind::WaitAll;
                else if (s == "first_k") p.kind = StragglerKind::FirstKArrivals;
                else if (s == "time_boxed") p.kind = StragglerKind::TimeBoxedBackfill;
                else throw std::invalid_argument("policy.kind must be wait_all, first_k or time_boxed");
            } else if (key == "k") p.k = v.get<std::size_t>();
            else if (key == "deadline_ms") p.deadline_ms = v.get<double>();
            else if (key == "fixed_ms") p.fixed_ms = v.get<double>();
            else if (key == "jitter_ms") p.jitter_ms = v.get<double>();
            else throw std::invalid_argument("unknown policy key: " + key);
        }
        return p;
    }
};

struct ExperimentManifest {
    /// "mini-sift", or a benchmark manifest path (relative paths resolve
    /// against the data root).
    std::string dataset = "mini-sift";
    std::optional<SyntheticSpec> synthetic;  // overrides the mini-sift generator
    bool paper_scale = false;
    IndexSpec index;
    std::vector<std::size_t> lanes = {4};
    std::size_t k_lane = 16;
    std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> pool_ratios = {0.8, 0.9, 1.0, 1.1, 1.25, 1.5};
    std::vector<std::uint64_t> seeds = {42, 123, 789};
    /// Naive baselines to run next to the partitioned sweep.
    std::vector<LaneMode> baselines = {LaneMode::naive_identical()};
    PolicySpec policy;
    std::size_t k = 10;
    std::size_t max_queries = 0;  // 0 = all
    std::size_t rho0_sample = 100;
    bool log_outcomes = true;
    std::string output_dir = "out";

    nlohmann::json to_json() const {
        nlohmann::json modes = nlohmann::json::array();
        for (const auto& m : baselines) modes.push_back(m.name());
        nlohmann::json j = {{"dataset", dataset},
                            {"paper_scale", paper_scale},
                            {"index", index.to_json()},
                            {"M", lanes},
                            {"k_lane", k_lane},
                            {"alpha", alphas},
                            {"pool_ratios", pool_ratios},
                            {"seeds", seeds},
                            {"modes", modes},
                            {"policy", policy.to_json()},
                            {"k", k},
                            {"max_queries", max_queries},
                            {"rho0_sample", rho0_sample},
                            {"log_outcomes", log_outcomes},
                            {"output_dir", output_dir}};
        if (synthetic) j["synthetic"] = synthetic->to_json();
        return j;
    }

    static ExperimentManifest from_json(const nlohmann::json& j) {
        ExperimentManifest m;
        for (const auto& [key, v] : j.items()) {
            if (key == "dataset") m.dataset = v.get<std::string>();
            else if (key == "synthetic") m.synthetic = SyntheticSpec::from_json(v);
            else if (key == "paper_scale") m.paper_scale = v.get<bool>();
            else if (key == "index") m.index = IndexSpec::from_json(v);
            else if (key == "M") m.lanes = v.get<std::vector<std::size_t>>();
            else if (key == "k_lane") m.k_lane = v.get<std::size_t>();
            else if (key == "alpha") m.alphas = v.get<std::vector<double>>();
            else if (key == "pool_ratios") m.pool_ratios = v.get<std::vector<double>>();
            else if (key == "seeds") m.seeds = v.get<std::vector<std::uint64_t>>();
            else if (key == "modes") {
                m.baselines.clear();
                for (const auto& s : v) {
                    auto mode = LaneMode::from_string(s.get<std::string>());
                    if (!mode.naive()) continue;  // the partitioned sweep always runs
                    m.baselines.push_back(mode);
                }
            } else if (key == "policy") m.policy = PolicySpec::from_json(v);
            else if (key == "k") m.k = v.get<std::size_t>();
            else if (key == "max_queries") m.max_queries = v.get<std::size_t>();
            else if (key == "rho0_sample") m.rho0_sample = v.get<std::size_t>();
            else if (key == "log_outcomes") m.log_outcomes = v.get<bool>();
            else if (key == "output_dir") m.output_dir = v.get<std::string>();
            else throw std::invalid_argument("unknown manifest key: " + key);
        }
        m.validate();
        return m;
    }

    static ExperimentManifest load(const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("cannot open manifest " + p.string());
        return from_json(nlohmann::json::parse(in));
    }

    void validate() const {
        if (lanes.empty() || seeds.empty()) throw std::invalid_argument("manifest: M and seeds must be non-empty");
        for (auto M : lanes)
            if (M < 1) throw std::invalid_argument("manifest: M must be >= 1");
        if (k_lane < 1) throw std::invalid_argument("manifest: k_lane must be >= 1");
        for (double a : alphas)
            if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("manifest: alpha outside [0, 1]");
        for (double r : pool_ratios)
            if (!(r > 0.0)) throw std::invalid_argument("manifest: pool ratios must be positive");
        if (k < 1) throw std::invalid_argument("manifest: k must be >= 1");
        for (auto M : lanes)
            if (k > M * k_lane) throw std::invalid_argument("manifest: k exceeds k_total");
    }
};

/// One expanded grid point. Infeasible combinations carry a skip reason.
struct GridPoint {
    std::size_t lanes = 0;
    std::size_t k_lane = 0;
    double alpha = 0.0;
    std::size_t pool_size = 0;
    std::optional<std::string> skip_reason;
};

/// K_pool for a pool-size ratio (rounded up) and the dedication fraction
/// used there: the requested alpha when feasible, else the largest alpha
/// whose dedicated prefix plus shared suffix fits in K_pool.
inline GridPoint pool_ratio_point(std::size_t lanes, std::size_t k_lane, double ratio, double alpha = 1.0) {
    GridPoint g{lanes, k_lane, alpha, 0, std::nullopt};
    const double want = std::ceil(ratio * static_cast<double>(lanes * k_lane) - 1e-9);
    g.pool_size = static_cast<std::size_t>(std::max(want, 1.0));
    const std::size_t k_ded = dedicated_quota(alpha, k_lane);
    if (lanes * k_ded + (k_lane - k_ded) <= g.pool_size) return g;
    if (g.pool_size < k_lane) {
        g.skip_reason = "K_pool=" + std::to_string(g.pool_size) + " < k_lane even at alpha=0";
        return g;
    }
    const std::size_t fit = lanes > 1 ? (g.pool_size - k_lane) / (lanes - 1) : k_lane;
    const std::size_t k_ded_fit = std::min(fit, k_lane);
    g.alpha = static_cast<double>(k_ded_fit) / static_cast<double>(k_lane);
    return g;
}

/// Runs `body(i)` for i in [0, n) on up to `threads` threads.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < n; i += threads) body(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline std::filesystem::path data_root() {
    if (const char* env = std::getenv("LANEKIT_DATA"); env && *env) return env;
    return "data";
}

/// Loads the benchmark named by the manifest. With paper_scale set, the
/// SIFT1M files under <root>/sift are used when present; otherwise the
/// desk-scale generator stands in and a note is logged.
inline Benchmark resolve_benchmark(const ExperimentManifest& m, unsigned threads, std::ostream& log,
                                   const std::filesystem::path& root = data_root()) {
    if (m.paper_scale) {
        const auto dir = root / "sift";
        const auto base = dir / "sift_base.fvecs", query = dir / "sift_query.fvecs",
                   gt = dir / "sift_groundtruth.ivecs";
        if (std::filesystem::exists(base) && std::filesystem::exists(query)) {
            Benchmark b;
            b.name = "sift1m";
            b.base = std::make_shared<const Dataset>(load_fvecs(base), Metric::L2);
            b.queries = load_fvecs(query);
            if (std::filesystem::exists(gt)) {
                b.ground_truth = load_ivecs(gt);
                if (b.ground_truth.rows != b.queries.rows)
                    throw std::runtime_error("sift ground truth row count does not match queries");
            } else {
                b.ground_truth = load_or_build_ground_truth(dir / "sift_groundtruth.lanekit.ivecs", *b.base,
                                                            b.queries, kGroundTruthDepth, threads);
            }
            b.relevant = relevance_from_truth(b.ground_truth, 1);
            return b;
        }
        log << "paper-scale files not found under " << dir.string() << "; using mini-sift\n";
    }
    if (m.dataset == "mini-sift" || m.dataset == "synthetic") {
        auto b = generate_synthetic(m.synthetic.value_or(mini_sift_spec()), true, threads);
        b.name = m.dataset;
        return b;
    }
    std::filesystem::path p = m.dataset;
    if (p.is_relative() && !std::filesystem::exists(p)) p = root / p;
    auto manifest = BenchmarkManifest::load(p);
    return load_benchmark(manifest, p.parent_path(), true);
}

/// Builds each (family, seed) index once. With a directory, indexes saved
/// there by `build` are reused when they match the dataset.
class IndexCache {
public:
    IndexCache(std::shared_ptr<const Dataset> ds, IndexSpec spec,
               std::optional<std::filesystem::path> dir = std::nullopt)
        : ds_(std::move(ds)), spec_(spec), dir_(std::move(dir)) {}

    const IndexHandle& get(std::uint64_t seed) {
        auto it = cache_.find(seed);
        if (it != cache_.end()) return it->second;
        if (dir_) {
            const auto p = *dir_ / index_file_name(spec_.family, seed);
            if (std::filesystem::exists(p)) {
                try {
                    auto h = load_index(p, ds_);
                    if (h.family() == spec_.family) return cache_.emplace(seed, std::move(h)).first->second;
                } catch (const std::exception&) {
                    // stale or foreign file: rebuild below
                }
            }
        }
        return cache_.emplace(seed, spec_.build(ds_, seed)).first->second;
    }

    const IndexSpec& spec() const { return spec_; }

    static std::string index_file_name(IndexFamily f, std::uint64_t seed) {
        return to_string(f) + "_seed" + std::to_string(seed) + ".lkidx";
    }

private:
    std::shared_ptr<const Dataset> ds_;
    IndexSpec spec_;
    std::optional<std::filesystem::path> dir_;
    std::map<std::uint64_t, IndexHandle> cache_;
};

/// Per-query measurements of one (config, seed) cell.
struct CellResult {
    std::string label;  // alpha value, or "single" / a naive mode name
    std::size_t lanes = 0;
    std::size_t k_lane = 0;
    double alpha = 0.0;
    std::size_t pool_size = 0;
    std::uint64_t seed = 0;
    std::vector<double> recall;
    std::vector<std::optional<double>> hit;
    std::vector<std::optional<double>> mrr;
    std::vector<double> overlap;
    std::vector<double> union_size;
    std::vector<double> node_visits;
    std::vector<double> list_scans;
    std::vector<double> vectors_scored;
    std::vector<double> pool_node_visits;
    std::vector<double> pool_list_scans;
    std::vector<double> planner_us;

    double mean_recall() const { return mean_std(recall).mean; }
};

inline std::size_t query_count(const Benchmark& b, const ExperimentManifest& m) {
    return m.max_queries ? std::min(m.max_queries, b.n_queries()) : b.n_queries();
}

/// Evaluates `run(q)` for every query and records quality, overlap and cost.
inline CellResult evaluate_cell(const Benchmark& b, std::size_t n_queries, std::size_t k, unsigned threads,
                                const std::function<QueryOutcome(std::size_t)>& run,
                                std::vector<QueryOutcome>* keep = nullptr) {
    CellResult c;
    c.recall.resize(n_queries);
    c.hit.resize(n_queries);
    c.mrr.resize(n_queries);
    c.overlap.resize(n_queries);
    c.union_size.resize(n_queries);
    c.node_visits.resize(n_queries);
    c.list_scans.resize(n_queries);
    c.vectors_scored.resize(n_queries);
    c.pool_node_visits.resize(n_queries);
    c.pool_list_scans.resize(n_queries);
    c.planner_us.resize(n_queries);
    if (keep) keep->assign(n_queries, {});
    parallel_for(n_queries, threads, [&](std::size_t q) {
        auto o = run(q);
        const auto ids = o.merged.topk_ids();
        c.recall[q] = recall_at_k(ids, b.truth(q, k), k);
        if (q < b.relevant.size()) {
            c.hit[q] = hit_at_k(ids, b.relevant[q], k);
            c.mrr[q] = mrr_at_k(ids, b.relevant[q], k);
        }
        c.overlap[q] = o.merged.overlap_rho;
        c.union_size[q] = static_cast<double>(o.merged.union_size);
        c.node_visits[q] = static_cast<double>(o.total_cost.node_visits);
        c.list_scans[q] = static_cast<double>(o.total_cost.list_scans);
        c.vectors_scored[q] = static_cast<double>(o.total_cost.vectors_scored);
        c.pool_node_visits[q] = static_cast<double>(o.pool_cost.node_visits);
        c.pool_list_scans[q] = static_cast<double>(o.pool_cost.list_scans);
        c.planner_us[q] = std::chrono::duration<double, std::micro>(o.pool_cost.planner_time).count();
        if (keep) (*keep)[q] = std::move(o);
    });
    return c;
}

inline void add_cell_rows(MetricsCsv& csv, const std::string& dataset, const std::string& index,
                          const CellResult& c, std::size_t k) {
    const std::string ks = std::to_string(k);
    auto row = [&](const std::string& metric, double v) {
        csv.add({dataset, index, c.lanes, c.k_lane, c.label, c.seed, metric, v});
    };
    row("recall@" + ks, mean_std(c.recall).mean);
    auto hit = mean_present(c.hit);
    if (hit.included) {
        row("hit@" + ks, hit.mean);
        row("mrr@" + ks, mean_present(c.mrr).mean);
    }
    row("overlap", mean_std(c.overlap).mean);
    row("union_size", mean_std(c.union_size).mean);
    row("node_visits", mean_std(c.node_visits).mean);
    row("list_scans", mean_std(c.list_scans).mean);
    row("vectors_scored", mean_std(c.vectors_scored).mean);
}

struct RunReport {
    MetricsCsv csv;
    std::vector<CellResult> cells;
    std::vector<std::string> skipped;
    nlohmann::json summary = nlohmann::json::object();

    const CellResult* find(const std::string& label, std::size_t lanes, std::uint64_t seed,
                           std::optional<std::size_t> pool = std::nullopt) const {
        for (const auto& c : cells)
            if (c.label == label && c.lanes == lanes && c.seed == seed && (!pool || c.pool_size == *pool))
                return &c;
        return nullptr;
    }
};

inline std::string alpha_label(double a) { return MetricsCsv::format_alpha(a); }

namespace detail {

inline PartitionConfig query_config(const GridPoint& g, std::uint64_t seed, std::size_t q) {
    return PartitionConfig(g.lanes, g.k_lane, g.alpha, g.pool_size, PrfKey::for_query(seed, q).query_seed);
}

inline CellResult run_partitioned_cell(const Benchmark& b, const IndexHandle& idx, const ExperimentManifest& m,
                                       const GridPoint& g, std::uint64_t seed, unsigned threads,
                                       std::vector<QueryOutcome>* keep) {
    const auto opts = m.index.lane_options();
    const auto policy = m.policy.make(seed, m.k);
    auto c = evaluate_cell(b, query_count(b, m), m.k, threads, [&](std::size_t q) {
        return run_query(idx, b.query(q), query_config(g, seed, q), LaneMode::partitioned(), policy, m.k, opts, q);
    }, keep);
    c.label = alpha_label(g.alpha);
    c.lanes = g.lanes;
    c.k_lane = g.k_lane;
    c.alpha = g.alpha;
    c.pool_size = g.pool_size;
    c.seed = seed;
    return c;
}

inline CellResult run_naive_cell(const Benchmark& b, const IndexHandle& idx, const ExperimentManifest& m,
                                 LaneMode mode, std::size_t lanes, std::uint64_t seed, unsigned threads,
                                 std::vector<QueryOutcome>* keep) {
    auto opts = m.index.lane_options();
    opts.jitter_seed = seed;
    const auto policy = m.policy.make(seed, m.k);
    const GridPoint g{lanes, m.k_lane, 0.0, m.k_lane, std::nullopt};
    auto c = evaluate_cell(b, query_count(b, m), m.k, threads, [&](std::size_t q) {
        return run_query(idx, b.query(q), query_config(g, seed, q), mode, policy, m.k, opts, q);
    }, keep);
    c.label = mode.name();
    c.lanes = lanes;
    c.k_lane = m.k_lane;
    c.seed = seed;
    return c;
}

inline CellResult run_single_cell(const Benchmark& b, const IndexHandle& idx, const ExperimentManifest& m,
                                  std::size_t lanes, std::uint64_t seed, unsigned threads) {
    const auto opts = m.index.lane_options();
    const std::size_t k_total = lanes * m.k_lane;
    auto c = evaluate_cell(b, query_count(b, m), m.k, threads, [&](std::size_t q) {
        return run_single_baseline(idx, b.query(q), k_total, m.k, lanes, opts, q);
    });
    c.label = "single";
    c.lanes = lanes;
    c.k_lane = m.k_lane;
    c.alpha = 1.0;
    c.pool_size = k_total;
    c.seed = seed;
    return c;
}

inline void write_outcomes(std::ostream* log, const std::vector<QueryOutcome>& outs) {
    if (!log) return;
    for (const auto& o : outs) *log << o.to_json().dump() << '\n';
}

inline nlohmann::json across_seeds(const RunReport& r, const std::string& label, std::size_t lanes,
                                   const std::vector<std::uint64_t>& seeds,
                                   std::optional<std::size_t> pool = std::nullopt) {
    std::vector<double> per_seed;
    for (auto s : seeds)
        if (const auto* c = r.find(label, lanes, s, pool)) per_seed.push_back(c->mean_recall());
    return QualityReport::from_seeds("recall", per_seed).to_json();
}

}  // namespace detail

/// Alpha sweep at each M: partitioned lanes per alpha, the naive baselines
/// and the single-index ceiling, for every seed. Also reports measured rho0
/// and predicted vs measured gain.
inline RunReport run_sweep(const Benchmark& b, IndexCache& indexes, const ExperimentManifest& m,
                           unsigned threads = 1, std::ostream* outcome_log = nullptr) {
    RunReport r;
    const std::string family = to_string(indexes.spec().family);
    std::ostream* log = outcome_log;
    for (auto seed : m.seeds) {
        const auto& idx = indexes.get(seed);
        for (auto M : m.lanes) {
            std::vector<QueryOutcome> outs;
            for (double a : m.alphas) {
                const GridPoint g{M, m.k_lane, a, M * m.k_lane, std::nullopt};
                r.cells.push_back(detail::run_partitioned_cell(b, idx, m, g, seed, threads, log ? &outs : nullptr));
                add_cell_rows(r.csv, b.name, family, r.cells.back(), m.k);
                detail::write_outcomes(log, outs);
            }
            for (const auto& mode : m.baselines) {
                r.cells.push_back(detail::run_naive_cell(b, idx, m, mode, M, seed, threads, log ? &outs : nullptr));
                add_cell_rows(r.csv, b.name, family, r.cells.back(), m.k);
                detail::write_outcomes(log, outs);
            }
            r.cells.push_back(detail::run_single_cell(b, idx, m, M, seed, threads));
            add_cell_rows(r.csv, b.name, family, r.cells.back(), m.k);

            // rho0 from naive identical lanes, and the gain it predicts
            const auto sample = std::min(m.rho0_sample, query_count(b, m));
            auto stats = measure_rho0(idx, b.queries, sample, M, m.k_lane, LaneMode::naive_identical(), seed,
                                      m.index.lane_options());
            const double predicted = predicted_gain(stats.rho0.mean, M);
            const auto* a0 = r.find(alpha_label(0.0), M, seed);
            const auto* a1 = r.find(alpha_label(1.0), M, seed);
            auto meta = [&](const std::string& metric, double v) {
                r.csv.add({b.name, family, M, m.k_lane, "-", seed, metric, v});
            };
            meta("rho0", stats.rho0.mean);
            meta("U0", stats.u0.mean);
            meta("predicted_gain", predicted);
            if (a0 && a1) {
                const double c0 = mean_std(a0->union_size).mean, c1 = mean_std(a1->union_size).mean;
                if (c0 > 0) meta("measured_coverage_gain", c1 / c0);
                if (a0->mean_recall() > 0) meta("measured_recall_gain", a1->mean_recall() / a0->mean_recall());
            }
        }
    }
    for (auto M : m.lanes) {
        nlohmann::json rows = nlohmann::json::object();
        for (double a : m.alphas) rows[alpha_label(a)] = detail::across_seeds(r, alpha_label(a), M, m.seeds);
        for (const auto& mode : m.baselines) rows[mode.name()] = detail::across_seeds(r, mode.name(), M, m.seeds);
        rows["single"] = detail::across_seeds(r, "single", M, m.seeds);
        r.summary["M=" + std::to_string(M)] = rows;
    }
    return r;
}

/// Pool-size ablation at alpha = 1 (reduced where K_pool cannot hold the
/// dedicated prefix). Writes a wide CSV with the predicted curve.
struct PoolSizeRow {
    double ratio = 0.0;
    std::size_t pool_size = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    double recall = 0.0;
    double union_size = 0.0;
    double min_union = 0.0;
    double max_union = 0.0;
    double predicted = 0.0;
};

struct PoolSizeReport {
    std::vector<PoolSizeRow> rows;
    std::vector<std::string> skipped;
    std::string dataset;
    std::string index;
    std::size_t lanes = 0;
    std::size_t k_lane = 0;

    std::string csv() const {
        std::ostringstream out;
        out << "dataset,index,M,k_lane,ratio,K_pool,alpha,seed,recall@10,union_size,predicted\n";
        for (const auto& r : rows)
            out << dataset << ',' << index << ',' << lanes << ',' << k_lane << ',' << MetricsCsv::format_alpha(r.ratio)
                << ',' << r.pool_size << ',' << MetricsCsv::format_alpha(r.alpha) << ',' << r.seed << ','
                << MetricsCsv::format_value(r.recall) << ',' << MetricsCsv::format_value(r.union_size) << ','
                << MetricsCsv::format_value(r.predicted) << '\n';
        return out.str();
    }
};

inline PoolSizeReport run_poolsize(const Benchmark& b, IndexCache& indexes, const ExperimentManifest& m,
                                   unsigned threads = 1) {
    PoolSizeReport rep;
    rep.dataset = b.name;
    rep.index = to_string(indexes.spec().family);
    rep.lanes = m.lanes.front();
    rep.k_lane = m.k_lane;
    const std::size_t k_total = rep.lanes * m.k_lane;
    for (auto seed : m.seeds) {
        const auto& idx = indexes.get(seed);
        for (double ratio : m.pool_ratios) {
            auto g = pool_ratio_point(rep.lanes, m.k_lane, ratio, 1.0);
            if (g.skip_reason) {
                rep.skipped.push_back("ratio " + MetricsCsv::format_alpha(ratio) + ": " + *g.skip_reason);
                continue;
            }
            if (g.pool_size > b.base->size()) {
                rep.skipped.push_back("ratio " + MetricsCsv::format_alpha(ratio) + ": K_pool > N");
                continue;
            }
            auto c = detail::run_partitioned_cell(b, idx, m, g, seed, threads, nullptr);
            PoolSizeRow row;
            row.ratio = ratio;
            row.pool_size = g.pool_size;
            row.alpha = g.alpha;
            row.seed = seed;
            row.recall = c.mean_recall();
            row.union_size = mean_std(c.union_size).mean;
            row.min_union = *std::min_element(c.union_size.begin(), c.union_size.end());
            row.max_union = *std::max_element(c.union_size.begin(), c.union_size.end());
            row.predicted = std::min(static_cast<double>(k_total) / static_cast<double>(g.pool_size), 1.0);
            rep.rows.push_back(row);
        }
    }
    return rep;
}

/// Lane scaling: alpha 0 and 1 and the single-index ceiling at each M.
inline RunReport run_lanescale(const Benchmark& b, IndexCache& indexes, const ExperimentManifest& m,
                               unsigned threads = 1) {
    RunReport r;
    const std::string family = to_string(indexes.spec().family);
    for (auto seed : m.seeds) {
        const auto& idx = indexes.get(seed);
        for (auto M : m.lanes) {
            if (M * m.k_lane > b.base->size()) {
                r.skipped.push_back("M=" + std::to_string(M) + ": k_total > N");
                continue;
            }
            for (double a : {0.0, 1.0}) {
                const GridPoint g{M, m.k_lane, a, M * m.k_lane, std::nullopt};
                r.cells.push_back(detail::run_partitioned_cell(b, idx, m, g, seed, threads, nullptr));
                add_cell_rows(r.csv, b.name, family, r.cells.back(), m.k);
            }
            r.cells.push_back(detail::run_single_cell(b, idx, m, M, seed, threads));
            add_cell_rows(r.csv, b.name, family, r.cells.back(), m.k);
        }
    }
    for (auto M : m.lanes) {
        nlohmann::json rows = nlohmann::json::object();
        for (const char* label : {"0", "1", "single"}) rows[label] = detail::across_seeds(r, label, M, m.seeds);
        r.summary["M=" + std::to_string(M)] = rows;
    }
    return r;
}

}  // namespace lanekit
