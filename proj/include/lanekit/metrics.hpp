#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "lanekit/core.hpp"

namespace lanekit {

/// |intersection| / |union| over any number of id sets (duplicates inside a
/// set are ignored). A single set has overlap 1.
inline double jaccard_overlap(std::span<const std::vector<CandidateId>> sets) {
    if (sets.empty()) throw std::invalid_argument("jaccard_overlap: no sets");
    std::vector<std::vector<CandidateId>> sorted;
    sorted.reserve(sets.size());
    for (const auto& s : sets) {
        auto t = s;
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
        sorted.push_back(std::move(t));
    }
    std::vector<CandidateId> inter = sorted[0], uni = sorted[0], tmp;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        tmp.clear();
        std::set_intersection(inter.begin(), inter.end(), sorted[i].begin(), sorted[i].end(),
                              std::back_inserter(tmp));
        inter.swap(tmp);
        tmp.clear();
        std::set_union(uni.begin(), uni.end(), sorted[i].begin(), sorted[i].end(),
                       std::back_inserter(tmp));
        uni.swap(tmp);
    }
    if (uni.empty()) throw std::invalid_argument("jaccard_overlap: empty union");
    return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

inline double jaccard_overlap(std::initializer_list<std::vector<CandidateId>> sets) {
    std::vector<std::vector<CandidateId>> v(sets);
    return jaccard_overlap(std::span<const std::vector<CandidateId>>(v));
}

/// |result[:k] ∩ truth[:k]| / k.
inline double recall_at_k(std::span<const CandidateId> result, std::span<const CandidateId> truth,
                          std::size_t k) {
    if (k == 0) throw std::invalid_argument("recall_at_k: k must be >= 1");
    if (truth.size() < k) throw std::invalid_argument("recall_at_k: ground truth shorter than k");
    std::unordered_set<CandidateId> t(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(k));
    std::size_t hits = 0;
    const std::size_t n = std::min(k, result.size());
    for (std::size_t i = 0; i < n; ++i) hits += t.count(result[i]);
    return static_cast<double>(hits) / static_cast<double>(k);
}

/// 1 if any relevant id is in the top k, else 0; nullopt for an empty
/// relevance set (such queries are excluded from aggregates).
inline std::optional<double> hit_at_k(std::span<const CandidateId> result,
                                      std::span<const CandidateId> relevant, std::size_t k) {
    if (k == 0) throw std::invalid_argument("hit_at_k: k must be >= 1");
    if (relevant.empty()) return std::nullopt;
    const std::size_t n = std::min(k, result.size());
    for (std::size_t i = 0; i < n; ++i)
        if (std::find(relevant.begin(), relevant.end(), result[i]) != relevant.end()) return 1.0;
    return 0.0;
}

/// Reciprocal rank of the first relevant id within the top k.
inline std::optional<double> mrr_at_k(std::span<const CandidateId> result,
                                      std::span<const CandidateId> relevant, std::size_t k) {
    if (k == 0) throw std::invalid_argument("mrr_at_k: k must be >= 1");
    if (relevant.empty()) return std::nullopt;
    const std::size_t n = std::min(k, result.size());
    for (std::size_t i = 0; i < n; ++i)
        if (std::find(relevant.begin(), relevant.end(), result[i]) != relevant.end())
            return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::size_t count = 0;
};

/// Accumulates in input order, so results do not depend on evaluation order
/// as long as values are stored by query index.
inline MeanStd mean_std(std::span<const double> values) {
    MeanStd r;
    r.count = values.size();
    if (values.empty()) return r;
    double s = 0.0;
    for (double v : values) s += v;
    r.mean = s / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size()));
    return r;
}

/// Mean over the present values; counts the excluded ones.
struct OptionalMean {
    double mean = 0.0;
    std::size_t included = 0;
    std::size_t excluded = 0;
};

inline OptionalMean mean_present(std::span<const std::optional<double>> values) {
    OptionalMean r;
    double s = 0.0;
    for (const auto& v : values) {
        if (v) {
            s += *v;
            ++r.included;
        } else {
            ++r.excluded;
        }
    }
    if (r.included) r.mean = s / static_cast<double>(r.included);
    return r;
}

struct QualityReport {
    std::string metric;
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> per_seed;

    static QualityReport from_seeds(std::string name, std::vector<double> per_seed) {
        auto ms = mean_std(per_seed);
        return {std::move(name), ms.mean, ms.std, std::move(per_seed)};
    }

    nlohmann::json to_json() const {
        return {{"metric", metric}, {"mean", mean}, {"std", std}, {"per_seed", per_seed}};
    }
};

/// Convergence statistics of naive lanes: rho0 (Jaccard of lane sets) and
/// U0 (distinct ids they cover), per query and aggregated.
struct OverlapStats {
    std::size_t lanes = 0;
    std::size_t k_lane = 0;
    std::vector<double> rho0_per_query;
    std::vector<double> u0_per_query;
    MeanStd rho0;
    MeanStd u0;

    void finalize() {
        rho0 = mean_std(rho0_per_query);
        u0 = mean_std(u0_per_query);
    }

    nlohmann::json to_json() const {
        return {{"M", lanes},
                {"k_lane", k_lane},
                {"queries", rho0_per_query.size()},
                {"rho0_mean", rho0.mean},
                {"rho0_std", rho0.std},
                {"U0_mean", u0.mean},
                {"U0_std", u0.std}};
    }
};

/// Overlap statistics from explicit per-query lane sets.
inline OverlapStats overlap_stats_from_lane_sets(
    const std::vector<std::vector<std::vector<CandidateId>>>& per_query, std::size_t k_lane) {
    OverlapStats s;
    s.k_lane = k_lane;
    for (const auto& lanes : per_query) {
        s.lanes = std::max(s.lanes, lanes.size());
        s.rho0_per_query.push_back(jaccard_overlap(std::span<const std::vector<CandidateId>>(lanes)));
        std::vector<CandidateId> uni;
        for (const auto& l : lanes) uni.insert(uni.end(), l.begin(), l.end());
        std::sort(uni.begin(), uni.end());
        uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
        s.u0_per_query.push_back(static_cast<double>(uni.size()));
    }
    s.finalize();
    return s;
}

/// Metrics CSV: dataset,index,M,k_lane,alpha,seed,metric,value.
class MetricsCsv {
public:
    static constexpr const char* kHeader = "dataset,index,M,k_lane,alpha,seed,metric,value";

    struct Row {
        std::string dataset;
        std::string index;
        std::size_t lanes = 0;
        std::size_t k_lane = 0;
        std::string alpha;  // "-" for rows that are not tied to one alpha
        std::uint64_t seed = 0;
        std::string metric;
        double value = 0.0;
    };

    void add(Row r) { rows_.push_back(std::move(r)); }
    const std::vector<Row>& rows() const { return rows_; }

    std::string str() const {
        std::ostringstream out;
        out << kHeader << '\n';
        for (const auto& r : rows_) {
            out << r.dataset << ',' << r.index << ',' << r.lanes << ',' << r.k_lane << ','
                << r.alpha << ',' << r.seed << ',' << r.metric << ',' << format_value(r.value) << '\n';
        }
        return out.str();
    }

    void write(const std::filesystem::path& p) const {
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        out << str();
    }

    static std::string format_alpha(double a) {
        std::ostringstream s;
        s << a;
        return s.str();
    }

    static std::string format_value(double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return buf;
    }

private:
    std::vector<Row> rows_;
};

/// Per-query overlap recomputed offline from an assignment dump
/// (JSON lines with query_id, lane_id, positions, ids).
struct DumpedQueryOverlap {
    std::uint64_t query_id = 0;
    std::size_t lanes = 0;
    std::size_t union_size = 0;
    double rho = 0.0;
};

inline std::vector<DumpedQueryOverlap> check_assignment_dump(std::istream& in) {
    std::map<std::uint64_t, std::map<std::size_t, std::vector<CandidateId>>> by_query;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("query_id") || !j.contains("lane_id") || !j.contains("ids"))
            throw std::runtime_error("assignment dump: malformed line " + std::to_string(line_no));
        by_query[j["query_id"].get<std::uint64_t>()][j["lane_id"].get<std::size_t>()] =
            j["ids"].get<std::vector<CandidateId>>();
    }
    std::vector<DumpedQueryOverlap> out;
    for (const auto& [qid, lanes] : by_query) {
        std::vector<std::vector<CandidateId>> sets;
        for (const auto& [_, ids] : lanes) sets.push_back(ids);
        auto stats = overlap_stats_from_lane_sets({sets}, 0);
        out.push_back({qid, sets.size(), static_cast<std::size_t>(stats.u0_per_query[0]),
                       stats.rho0_per_query[0]});
    }
    return out;
}

inline std::vector<DumpedQueryOverlap> check_assignment_dump(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return check_assignment_dump(in);
}

}  // namespace lanekit
