#pragma once

// Versioned binary container for built indexes.
//
//   magic "LNKTIDX\0" | u32 version | u32 family | u32 metric | u32 reserved
//   u64 dim | u64 N | u64 dataset checksum | u64 param[3]
//   sections: u32 tag | u64 byte length | payload ...   terminated by "END\0"
//
// Vectors are not stored; loading takes the dataset and verifies shape,
// metric and checksum against the header.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanekit/index/handle.hpp"
#include "lanekit/index/vecs_io.hpp"

namespace lanekit {

inline constexpr std::array<char, 8> kIndexMagic = {'L', 'N', 'K', 'T', 'I', 'D', 'X', '\0'};
inline constexpr std::uint32_t kIndexFormatVersion = 1;

namespace detail {

constexpr std::uint32_t section_tag(const char (&s)[5]) {
    return std::uint32_t(std::uint8_t(s[0])) | std::uint32_t(std::uint8_t(s[1])) << 8 |
           std::uint32_t(std::uint8_t(s[2])) << 16 | std::uint32_t(std::uint8_t(s[3])) << 24;
}

class ByteReader {
public:
    explicit ByteReader(const std::vector<unsigned char>& b) : bytes_(b) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T v = load_le<T>(bytes_.data() + pos_);
        pos_ += sizeof(T);
        return v;
    }
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n)
            throw std::runtime_error("index file truncated at byte offset " + std::to_string(pos_));
    }
    std::size_t pos() const { return pos_; }

private:
    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> serialize_index(const IndexHandle& index) {
    using detail::store_le;
    const Dataset& ds = index.dataset();
    std::vector<unsigned char> out(kIndexMagic.begin(), kIndexMagic.end());
    store_le<std::uint32_t>(out, kIndexFormatVersion);
    store_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.family()));
    store_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.metric()));
    store_le<std::uint32_t>(out, 0);
    store_le<std::uint64_t>(out, ds.dim());
    store_le<std::uint64_t>(out, ds.size());
    store_le<std::uint64_t>(out, checksum(ds.vectors()));

    std::uint64_t params[3] = {0, 0, 0};
    if (const auto* h = index.hnsw())
        params[0] = h->params().graph_degree, params[1] = h->params().ef_construction,
        params[2] = h->params().seed;
    if (const auto* v = index.ivf())
        params[0] = v->params().nlist, params[1] = v->params().train_sample_size,
        params[2] = v->params().seed;
    for (auto p : params) store_le<std::uint64_t>(out, p);

    auto section = [&](std::uint32_t tag, const std::vector<unsigned char>& payload) {
        store_le<std::uint32_t>(out, tag);
        store_le<std::uint64_t>(out, payload.size());
        out.insert(out.end(), payload.begin(), payload.end());
    };

    if (const auto* h = index.hnsw()) {
        std::vector<unsigned char> entry, levels, links;
        store_le<std::uint32_t>(entry, h->entry_point());
        for (int l : h->levels()) store_le<std::int32_t>(levels, l);
        for (const auto& node : h->links())
            for (const auto& layer : node) {
                store_le<std::uint32_t>(links, static_cast<std::uint32_t>(layer.size()));
                for (auto nb : layer) store_le<std::uint32_t>(links, nb);
            }
        section(detail::section_tag("ENTR"), entry);
        section(detail::section_tag("LEVL"), levels);
        section(detail::section_tag("LINK"), links);
    } else if (const auto* v = index.ivf()) {
        std::vector<unsigned char> cent, asgn;
        for (float f : v->centroids().data) store_le<float>(cent, f);
        for (auto l : v->assignment()) store_le<std::uint32_t>(asgn, l);
        section(detail::section_tag("CENT"), cent);
        section(detail::section_tag("ASGN"), asgn);
    }
    section(detail::section_tag("END\0"), {});
    return out;
}

inline IndexHandle deserialize_index(const std::vector<unsigned char>& bytes,
                                     std::shared_ptr<const Dataset> ds) {
    if (!ds) throw std::invalid_argument("load_index: null dataset");
    detail::ByteReader in(bytes);
    in.need(kIndexMagic.size());
    if (!std::equal(kIndexMagic.begin(), kIndexMagic.end(), bytes.begin()))
        throw std::runtime_error("not a lanekit index file (bad magic)");
    for (std::size_t i = 0; i < kIndexMagic.size(); ++i) in.get<std::uint8_t>();
    const auto version = in.get<std::uint32_t>();
    if (version != kIndexFormatVersion)
        throw std::runtime_error("unsupported index format version " + std::to_string(version) +
                                 " (expected " + std::to_string(kIndexFormatVersion) + ")");
    const auto family_raw = in.get<std::uint32_t>();
    if (family_raw > 2) throw std::runtime_error("unknown index family in file");
    const auto family = static_cast<IndexFamily>(family_raw);
    const auto metric = static_cast<Metric>(in.get<std::uint32_t>());
    in.get<std::uint32_t>();
    const auto dim = in.get<std::uint64_t>();
    const auto n = in.get<std::uint64_t>();
    const auto sum = in.get<std::uint64_t>();
    if (dim != ds->dim() || n != ds->size() || metric != ds->metric())
        throw std::runtime_error("index file does not match dataset shape or metric");
    if (sum != checksum(ds->vectors()))
        throw std::runtime_error("index file was built from a different dataset (checksum)");
    std::uint64_t params[3];
    for (auto& p : params) p = in.get<std::uint64_t>();

    std::vector<int> levels;
    HnswLiteIndex::Links links;
    std::uint32_t entry = 0;
    Matrix<float> centroids;
    std::vector<ListId> assignment;
    bool seen_end = false;
    while (!seen_end) {
        const auto tag = in.get<std::uint32_t>();
        const auto len = in.get<std::uint64_t>();
        in.need(len);
        const std::size_t end = in.pos() + len;
        if (tag == detail::section_tag("END\0")) {
            seen_end = true;
        } else if (tag == detail::section_tag("ENTR")) {
            entry = in.get<std::uint32_t>();
        } else if (tag == detail::section_tag("LEVL")) {
            levels.resize(n);
            for (auto& l : levels) l = in.get<std::int32_t>();
        } else if (tag == detail::section_tag("LINK")) {
            if (levels.size() != n) throw std::runtime_error("index file: LINK before LEVL");
            links.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (levels[i] < 0) throw std::runtime_error("index file: negative level");
                links[i].resize(static_cast<std::size_t>(levels[i]) + 1);
                for (auto& layer : links[i]) {
                    layer.resize(in.get<std::uint32_t>());
                    for (auto& nb : layer) nb = in.get<std::uint32_t>();
                }
            }
        } else if (tag == detail::section_tag("CENT")) {
            centroids = Matrix<float>(params[0], dim);
            for (auto& f : centroids.data) f = in.get<float>();
        } else if (tag == detail::section_tag("ASGN")) {
            assignment.resize(n);
            for (auto& a : assignment) a = in.get<std::uint32_t>();
        } else {
            throw std::runtime_error("index file: unknown section");
        }
        if (in.pos() != end) throw std::runtime_error("index file: section length mismatch");
    }

    switch (family) {
        case IndexFamily::BruteForce: return IndexHandle(BruteForceIndex(std::move(ds)));
        case IndexFamily::Hnsw:
            return IndexHandle(HnswLiteIndex::from_parts(
                std::move(ds), HnswParams{params[0], params[1], params[2]}, std::move(levels),
                std::move(links), entry));
        case IndexFamily::Ivf:
            return IndexHandle(IvfFlatIndex::from_parts(std::move(ds),
                                                        IvfParams{params[0], params[1], params[2]},
                                                        std::move(centroids), assignment));
    }
    throw std::runtime_error("unreachable");
}

inline void save_index(const std::filesystem::path& path, const IndexHandle& index) {
    detail::write_file(path, serialize_index(index));
}

inline IndexHandle load_index(const std::filesystem::path& path, std::shared_ptr<const Dataset> ds) {
    return deserialize_index(detail::read_file(path), std::move(ds));
}

}  // namespace lanekit
