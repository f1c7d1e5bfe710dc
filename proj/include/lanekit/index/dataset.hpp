#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanekit/core.hpp"

namespace lanekit {

/// Row-major rows x cols matrix, the in-memory form of *vecs files.
template <class T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}
    Matrix(std::size_t r, std::size_t c, std::vector<T> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != rows * cols) throw std::invalid_argument("Matrix: size mismatch");
    }

    std::span<const T> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::span<T> row(std::size_t i) { return {data.data() + i * cols, cols}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Squared L2, or negated dot product for inner product. Every score in the
/// library (index traversal, lane rescoring, ground truth) goes through this
/// one function so equal inputs always produce bit-identical distances.
inline float distance(Metric metric, std::span<const float> a, std::span<const float> b) {
    const std::size_t d = a.size();
    float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
    std::size_t i = 0;
    if (metric == Metric::L2) {
        for (; i + 4 <= d; i += 4) {
            const float d0 = a[i] - b[i], d1 = a[i + 1] - b[i + 1];
            const float d2 = a[i + 2] - b[i + 2], d3 = a[i + 3] - b[i + 3];
            s0 += d0 * d0;
            s1 += d1 * d1;
            s2 += d2 * d2;
            s3 += d3 * d3;
        }
        for (; i < d; ++i) {
            const float t = a[i] - b[i];
            s0 += t * t;
        }
        return (s0 + s1) + (s2 + s3);
    }
    for (; i + 4 <= d; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < d; ++i) s0 += a[i] * b[i];
    return -((s0 + s1) + (s2 + s3));
}

/// N x d float32 vectors with implicit ids [0, N).
class Dataset {
public:
    Dataset(Matrix<float> vectors, Metric metric) : vectors_(std::move(vectors)), metric_(metric) {
        if (vectors_.cols < 1) throw std::invalid_argument("Dataset: dimension must be >= 1");
        for (float v : vectors_.data)
            if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite component");
        if (metric_ == Metric::InnerProduct) {
            for (std::size_t i = 0; i < vectors_.rows; ++i) {
                double norm2 = 0.0;
                for (float v : vectors_.row(i)) norm2 += double(v) * double(v);
                if (std::abs(std::sqrt(norm2) - 1.0) > 1e-4)
                    throw std::invalid_argument("Dataset: inner-product vector " +
                                                std::to_string(i) + " is not unit-normalized");
            }
        }
    }

    std::size_t size() const { return vectors_.rows; }
    std::size_t dim() const { return vectors_.cols; }
    Metric metric() const { return metric_; }
    std::span<const float> row(std::size_t i) const { return vectors_.row(i); }
    const Matrix<float>& vectors() const { return vectors_; }

    float distance_to(std::span<const float> query, CandidateId id) const {
        return distance(metric_, query, vectors_.row(static_cast<std::size_t>(id)));
    }

    void check_query(std::span<const float> query) const {
        if (query.size() != dim())
            throw std::invalid_argument("dimension mismatch: query has " +
                                        std::to_string(query.size()) + ", dataset has " +
                                        std::to_string(dim()));
    }

private:
    Matrix<float> vectors_;
    Metric metric_;
};

inline void normalize_rows(Matrix<float>& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto r = m.row(i);
        double norm2 = 0.0;
        for (float v : r) norm2 += double(v) * double(v);
        const double norm = std::sqrt(norm2);
        if (norm == 0.0) continue;
        for (float& v : r) v = static_cast<float>(v / norm);
    }
}

/// FNV-1a over raw bytes; used for cache and manifest checksums.
inline std::uint64_t fnv1a64(std::span<const std::byte> bytes,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (auto b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <class T>
std::uint64_t checksum(const Matrix<T>& m) {
    std::uint64_t shape[2] = {m.rows, m.cols};
    auto h = fnv1a64(std::as_bytes(std::span<const std::uint64_t>(shape, 2)));
    return fnv1a64(std::as_bytes(std::span<const T>(m.data)), h);
}

}  // namespace lanekit
