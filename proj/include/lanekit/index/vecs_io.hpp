#pragma once

// fvecs / ivecs / bvecs: each record is a little-endian int32 dimension
// followed by that many float32 / int32 / uint8 components.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanekit/index/dataset.hpp"

namespace lanekit {

namespace detail {

template <class T>
T load_le(const unsigned char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

template <class T>
void store_le(std::vector<unsigned char>& out, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    out.insert(out.end(), b, b + sizeof(T));
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace detail

template <class T>
Matrix<T> decode_vecs(const std::vector<unsigned char>& bytes, const std::string& what = "vecs") {
    Matrix<T> m;
    std::size_t off = 0;
    std::size_t record = 0;
    while (off < bytes.size()) {
        if (bytes.size() - off < 4)
            throw std::runtime_error(what + ": truncated dimension header at byte offset " +
                                     std::to_string(off));
        const auto dim = detail::load_le<std::int32_t>(bytes.data() + off);
        if (dim <= 0)
            throw std::runtime_error(what + ": record " + std::to_string(record) +
                                     " has non-positive dimension " + std::to_string(dim) +
                                     " at byte offset " + std::to_string(off));
        if (record == 0) {
            m.cols = static_cast<std::size_t>(dim);
        } else if (static_cast<std::size_t>(dim) != m.cols) {
            throw std::runtime_error(what + ": record " + std::to_string(record) + " has dimension " +
                                     std::to_string(dim) + ", expected " + std::to_string(m.cols) +
                                     " at byte offset " + std::to_string(off));
        }
        const std::size_t payload = m.cols * sizeof(T);
        if (bytes.size() - off - 4 < payload)
            throw std::runtime_error(what + ": truncated record " + std::to_string(record) +
                                     " at byte offset " + std::to_string(off));
        const unsigned char* p = bytes.data() + off + 4;
        for (std::size_t j = 0; j < m.cols; ++j) m.data.push_back(detail::load_le<T>(p + j * sizeof(T)));
        off += 4 + payload;
        ++record;
    }
    m.rows = record;
    return m;
}

template <class T>
std::vector<unsigned char> encode_vecs(const Matrix<T>& m) {
    if (m.cols < 1 || m.cols > static_cast<std::size_t>(INT32_MAX))
        throw std::invalid_argument("encode_vecs: bad dimension");
    std::vector<unsigned char> out;
    out.reserve(m.rows * (4 + m.cols * sizeof(T)));
    for (std::size_t i = 0; i < m.rows; ++i) {
        detail::store_le<std::int32_t>(out, static_cast<std::int32_t>(m.cols));
        for (T v : m.row(i)) detail::store_le<T>(out, v);
    }
    return out;
}

inline Matrix<float> load_fvecs(const std::filesystem::path& p) {
    return decode_vecs<float>(detail::read_file(p), p.string());
}
inline Matrix<std::int32_t> load_ivecs(const std::filesystem::path& p) {
    return decode_vecs<std::int32_t>(detail::read_file(p), p.string());
}
inline Matrix<std::uint8_t> load_bvecs(const std::filesystem::path& p) {
    return decode_vecs<std::uint8_t>(detail::read_file(p), p.string());
}

inline void save_fvecs(const std::filesystem::path& p, const Matrix<float>& m) {
    detail::write_file(p, encode_vecs(m));
}
inline void save_ivecs(const std::filesystem::path& p, const Matrix<std::int32_t>& m) {
    detail::write_file(p, encode_vecs(m));
}
inline void save_bvecs(const std::filesystem::path& p, const Matrix<std::uint8_t>& m) {
    detail::write_file(p, encode_vecs(m));
}

inline std::uint64_t file_checksum(const std::filesystem::path& p) {
    auto bytes = detail::read_file(p);
    return fnv1a64(std::as_bytes(std::span<const unsigned char>(bytes)));
}

}  // namespace lanekit
