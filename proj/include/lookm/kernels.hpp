// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lookm/core.hpp"

namespace lookm {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

/// Selects the serial reference kernels or their OpenMP counterparts.
enum class Exec { Serial, Parallel };

/// Result of causal multi-head self-attention over a full sequence.
struct CausalAttention {
    Matrix output;               ///< L x d_model, heads concatenated (before output projection)
    std::vector<Matrix> probs;   ///< per head, L x L lower-triangular row-stochastic
};

namespace kernels {

// Both namespaces accumulate every dot product in ascending index order, so with
// -ffp-contract=off the serial and OpenMP results are bit-identical.

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
CausalAttention causal_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t n_heads, double scale);
/// Attention of one query row against every row of each lane of a layer; writes the
/// concatenated head outputs into `out` (size n_heads * head_dim).
void decode_attention(std::span<const double> q, std::span<const CacheLane* const> lanes, double scale,
                      std::span<double> out);
}  // namespace serial

namespace omp {
Matrix matmul(const Matrix& a, const Matrix& b);
CausalAttention causal_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t n_heads, double scale);
void decode_attention(std::span<const double> q, std::span<const CacheLane* const> lanes, double scale,
                      std::span<double> out);
}  // namespace omp

inline Matrix matmul(const Matrix& a, const Matrix& b, Exec exec) {
    return exec == Exec::Serial ? serial::matmul(a, b) : omp::matmul(a, b);
}

inline CausalAttention causal_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t n_heads,
                                        double scale, Exec exec) {
    return exec == Exec::Serial ? serial::causal_attention(q, k, v, n_heads, scale)
                                : omp::causal_attention(q, k, v, n_heads, scale);
}

inline void decode_attention(std::span<const double> q, std::span<const CacheLane* const> lanes, double scale,
                             std::span<double> out, Exec exec) {
    exec == Exec::Serial ? serial::decode_attention(q, lanes, scale, out)
                         : omp::decode_attention(q, lanes, scale, out);
}

}  // namespace kernels
}  // namespace lookm
