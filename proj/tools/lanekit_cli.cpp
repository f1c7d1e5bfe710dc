// lanekit: data generation, index building and the experiment grid.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lanekit/lanekit.hpp"

namespace fs = std::filesystem;
using namespace lanekit;
using nlohmann::json;

namespace {

struct Globals {
    std::string manifest;
    std::string out;
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
    bool paper_scale = false;
};

ExperimentManifest load_manifest(const Globals& g) {
    auto m = g.manifest.empty() ? ExperimentManifest{} : ExperimentManifest::load(g.manifest);
    if (g.seed) m.seeds = {*g.seed};
    if (!g.out.empty()) m.output_dir = g.out;
    if (g.paper_scale) m.paper_scale = true;
    return m;
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p = dir.empty() ? fs::path("out") : fs::path(dir);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

void print_skipped(const std::vector<std::string>& skipped) {
    for (const auto& s : skipped) std::cerr << "skipped: " << s << '\n';
}

void print_summary(const json& summary) {
    for (const auto& [group, rows] : summary.items()) {
        std::printf("%s\n", group.c_str());
        for (const auto& [label, r] : rows.items())
            std::printf("  %-12s recall %.4f +- %.4f\n", label.c_str(), r["mean"].get<double>(),
                        r["std"].get<double>());
    }
}

int cmd_gen(const Globals& g, SyntheticSpec spec) {
    if (g.seed) spec.seed = *g.seed;
    const fs::path dir = ensure_dir(g.out.empty() ? (data_root() / "mini-sift").string() : g.out);
    auto b = generate_synthetic(spec, false, g.threads);
    BenchmarkManifest bm;
    bm.name = spec.to_json() == mini_sift_spec().to_json() ? "mini-sift" : "synthetic";
    bm.metric = spec.metric;
    bm.gt_depth = std::min(spec.gt_depth, spec.n);
    bm.relevant_m = spec.relevant_m;
    bm.generator = spec.to_json();
    save_fvecs(dir / bm.base_file, b.base->vectors());
    save_fvecs(dir / bm.queries_file, b.queries);
    load_or_build_ground_truth(dir / bm.groundtruth_file, *b.base, b.queries, bm.gt_depth, g.threads);
    bm.base_checksum = hex64(file_checksum(dir / bm.base_file));
    bm.queries_checksum = hex64(file_checksum(dir / bm.queries_file));
    bm.groundtruth_checksum = hex64(file_checksum(dir / bm.groundtruth_file));
    bm.save(dir / "benchmark.json");
    std::printf("wrote %s (N=%zu d=%zu Q=%zu)\n", (dir / "benchmark.json").string().c_str(), spec.n,
                spec.dim, spec.n_queries);
    std::printf("base %s\nqueries %s\ngroundtruth %s\n", bm.base_checksum.c_str(),
                bm.queries_checksum.c_str(), bm.groundtruth_checksum.c_str());
    return 0;
}

int cmd_build(const Globals& g, const std::string& family) {
    auto m = load_manifest(g);
    if (!family.empty()) m.index.family = index_family_from_string(family);
    const fs::path dir = ensure_dir(m.output_dir);
    auto b = resolve_benchmark(m, g.threads, std::cerr);
    json log = json::array();
    for (auto seed : m.seeds) {
        const auto t0 = std::chrono::steady_clock::now();
        auto idx = m.index.build(b.base, seed);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto path = dir / IndexCache::index_file_name(m.index.family, seed);
        save_index(path, idx);
        json entry = {{"file", path.filename().string()},
                      {"seed", seed},
                      {"index", m.index.to_json()},
                      {"dataset", b.name},
                      {"N", b.base->size()},
                      {"dim", b.base->dim()},
                      {"dataset_checksum", hex64(checksum(b.base->vectors()))},
                      {"build_seconds", secs},
                      {"file_checksum", hex64(file_checksum(path))}};
        if (const auto* h = idx.hnsw()) entry["max_level"] = h->max_level();
        log.push_back(entry);
        std::printf("built %s in %.2fs\n", path.string().c_str(), secs);
    }
    write_json(dir / ("build_log_" + to_string(m.index.family) + ".json"), log);
    return 0;
}

int cmd_groundtruth(const Globals& g, const std::string& bench_path, std::size_t depth) {
    if (bench_path.empty()) {
        auto m = load_manifest(g);
        auto b = resolve_benchmark(m, g.threads, std::cerr);
        const fs::path dir = ensure_dir(m.output_dir);
        bool rebuilt = false;
        auto gt = load_or_build_ground_truth(dir / "groundtruth.ivecs", *b.base, b.queries,
                                             std::min(depth, b.base->size()), g.threads, &rebuilt);
        std::printf("%s %s (%zu x %zu)\n", rebuilt ? "computed" : "cached",
                    (dir / "groundtruth.ivecs").string().c_str(), gt.rows, gt.cols);
        return 0;
    }
    fs::path p = bench_path;
    auto bm = BenchmarkManifest::load(p);
    auto b = load_benchmark(bm, p.parent_path(), false);
    bm.gt_depth = std::min(depth, b.base->size());
    bool rebuilt = false;
    auto gt = load_or_build_ground_truth(p.parent_path() / bm.groundtruth_file, *b.base, b.queries,
                                         bm.gt_depth, g.threads, &rebuilt);
    bm.groundtruth_checksum = hex64(file_checksum(p.parent_path() / bm.groundtruth_file));
    bm.save(p);
    std::printf("%s %s (%zu x %zu)\n", rebuilt ? "computed" : "cached",
                (p.parent_path() / bm.groundtruth_file).string().c_str(), gt.rows, gt.cols);
    return 0;
}

int cmd_sweep(const Globals& g) {
    auto m = load_manifest(g);
    const fs::path dir = ensure_dir(m.output_dir);
    auto b = resolve_benchmark(m, g.threads, std::cerr);
    IndexCache indexes(b.base, m.index, dir);
    std::optional<std::ofstream> log;
    if (m.log_outcomes) log.emplace(dir / "outcomes.jsonl");
    auto r = run_sweep(b, indexes, m, g.threads, log ? &*log : nullptr);
    r.csv.write(dir / "metrics.csv");
    write_json(dir / "sweep_summary.json", {{"manifest", m.to_json()}, {"recall", r.summary}});
    print_summary(r.summary);
    for (const auto& row : r.csv.rows())
        if (row.alpha == "-")
            std::printf("M=%zu seed=%llu %s=%.4f\n", row.lanes, static_cast<unsigned long long>(row.seed),
                        row.metric.c_str(), row.value);
    print_skipped(r.skipped);
    return 0;
}

int cmd_poolsize(const Globals& g) {
    auto m = load_manifest(g);
    const fs::path dir = ensure_dir(m.output_dir);
    auto b = resolve_benchmark(m, g.threads, std::cerr);
    IndexCache indexes(b.base, m.index, dir);
    auto r = run_poolsize(b, indexes, m, g.threads);
    write_text(dir / "poolsize.csv", r.csv());
    std::printf("%s", r.csv().c_str());
    print_skipped(r.skipped);
    return 0;
}

int cmd_lanescale(const Globals& g) {
    auto m = load_manifest(g);
    if (g.manifest.empty()) m.lanes = {2, 4, 8};
    const fs::path dir = ensure_dir(m.output_dir);
    auto b = resolve_benchmark(m, g.threads, std::cerr);
    IndexCache indexes(b.base, m.index, dir);
    auto r = run_lanescale(b, indexes, m, g.threads);
    r.csv.write(dir / "lanescale.csv");
    write_json(dir / "lanescale_summary.json", {{"manifest", m.to_json()}, {"recall", r.summary}});
    print_summary(r.summary);
    print_skipped(r.skipped);
    return 0;
}

json measure(const Globals& g, const std::string& mode, std::size_t sample) {
    auto m = load_manifest(g);
    auto b = resolve_benchmark(m, g.threads, std::cerr);
    IndexCache indexes(b.base, m.index, ensure_dir(m.output_dir));
    const auto seed = m.seeds.front();
    const std::size_t M = m.lanes.front();
    auto opts = m.index.lane_options();
    opts.jitter_seed = seed;
    auto stats = measure_rho0(indexes.get(seed), b.queries, sample, M, m.k_lane, LaneMode::from_string(mode),
                              seed, opts);
    auto rec = recommend(stats.rho0.mean, M, m.k_lane);
    json j = stats.to_json();
    j["mode"] = mode;
    j["index"] = to_string(m.index.family);
    j["recommended_alpha"] = rec.alpha;
    j["predicted_gain"] = rec.predicted_gain;
    j["U0_approx"] = rec.u0_approx;
    return j;
}

int cmd_rho0(const Globals& g, const std::string& mode, std::size_t sample) {
    auto j = measure(g, mode, sample);
    std::printf("%s\n", j.dump(2).c_str());
    write_json(ensure_dir(load_manifest(g).output_dir) / "rho0.json", j);
    return 0;
}

int cmd_recommend(const Globals& g, std::optional<double> rho0, std::size_t lanes, std::size_t k_lane,
                  const std::string& mode, std::size_t sample) {
    json j;
    if (rho0) {
        auto rec = recommend(*rho0, lanes, k_lane);
        j = rec.to_json();
        j["M"] = lanes;
    } else {
        j = measure(g, mode, sample);
    }
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

int cmd_microbench(const Globals& g, std::size_t lanes, std::size_t trials) {
    auto rep = planner_microbenchmark(lanes, {16, 32, 64, 128, 256}, trials, trials / 10 + 1,
                                      g.seed.value_or(1));
    std::printf("%8s %10s %10s %10s %8s\n", "k_total", "mean_us", "p50_us", "p95_us", "p95/p50");
    for (const auto& r : rep.rows)
        std::printf("%8zu %10.3f %10.3f %10.3f %8.3f\n", r.k_total, r.mean_us, r.p50_us, r.p95_us,
                    r.p50_us > 0 ? r.p95_us / r.p50_us : 0.0);
    std::printf("slope %.5f us/candidate, intercept %.3f us, R^2 %.4f\n", rep.slope_us_per_candidate,
                rep.intercept_us, rep.r_squared);
    if (!g.out.empty()) write_json(ensure_dir(g.out) / "microbench.json", rep.to_json());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lanekit: coordination-free candidate partitioning across search lanes"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--manifest", g.manifest, "Experiment manifest (JSON)")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--paper-scale", g.paper_scale, "Use SIFT1M files under $LANEKIT_DATA/sift when present");
    auto* seed_opt = app.add_option("--seed", seed, "Seed (replaces the manifest seed list)");

    SyntheticSpec spec = mini_sift_spec();
    std::string metric = "l2";
    auto* gen = app.add_subcommand("gen", "Generate the synthetic benchmark");
    gen->add_option("--n", spec.n, "Base vectors");
    gen->add_option("--dim", spec.dim, "Dimension");
    gen->add_option("--clusters", spec.n_clusters, "Mixture components");
    gen->add_option("--cluster-std", spec.cluster_std, "Component standard deviation");
    gen->add_option("--queries", spec.n_queries, "Queries");
    gen->add_option("--metric", metric, "l2 or ip");

    std::string family;
    auto* build = app.add_subcommand("build", "Build and save indexes for each seed");
    build->add_option("--family", family, "hnsw, ivf or flat");

    std::string bench_path;
    std::size_t depth = kGroundTruthDepth;
    auto* gt = app.add_subcommand("groundtruth", "Compute or refresh cached ground truth");
    gt->add_option("--benchmark", bench_path, "Benchmark manifest to update");
    gt->add_option("--depth", depth, "Neighbors per query");

    auto* sweep = app.add_subcommand("sweep", "Alpha sweep against naive and single-index baselines");
    auto* poolsize = app.add_subcommand("poolsize", "Pool-size ablation");
    auto* lanescale = app.add_subcommand("lanescale", "Lane-count scaling");

    std::string mode = "naive";
    std::size_t sample = 100;
    auto* rho0 = app.add_subcommand("rho0", "Measure naive-lane convergence");
    rho0->add_option("--mode", mode, "naive or jittered");
    rho0->add_option("--sample", sample, "Queries to sample");

    std::optional<double> rho0_value;
    std::size_t rec_lanes = 4, rec_k_lane = 16;
    auto* rec = app.add_subcommand("recommend", "Recommend alpha from a measured or given rho0");
    rec->add_option("--rho0", rho0_value, "Use this rho0 instead of measuring")->check(CLI::Range(0.0, 1.0));
    rec->add_option("--lanes", rec_lanes, "M when --rho0 is given");
    rec->add_option("--k-lane", rec_k_lane, "k_lane when --rho0 is given");
    rec->add_option("--mode", mode, "naive or jittered");
    rec->add_option("--sample", sample, "Queries to sample");

    std::size_t mb_lanes = 4, trials = 10000;
    auto* micro = app.add_subcommand("microbench", "Planner overhead microbenchmark");
    micro->add_option("--lanes", mb_lanes, "M");
    micro->add_option("--trials", trials, "Timed trials per k_total")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) g.seed = seed;

    try {
        if (*gen) {
            spec.metric = metric_from_string(metric);
            return cmd_gen(g, spec);
        }
        if (*build) return cmd_build(g, family);
        if (*gt) return cmd_groundtruth(g, bench_path, depth);
        if (*sweep) return cmd_sweep(g);
        if (*poolsize) return cmd_poolsize(g);
        if (*lanescale) return cmd_lanescale(g);
        if (*rho0) return cmd_rho0(g, mode, sample);
        if (*rec) return cmd_recommend(g, rho0_value, rec_lanes, rec_k_lane, mode, sample);
        if (*micro) return cmd_microbench(g, mb_lanes, trials);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
