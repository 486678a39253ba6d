// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lookm/kernels.hpp"

namespace lookm::kernels::omp {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimensions differ");
    }
    Matrix c(a.rows, b.cols);
    const auto rows = static_cast<std::ptrdiff_t>(a.rows);
    const std::size_t inner = a.cols;
    const std::size_t cols = b.cols;
    // i-k-j order: each output element still sums its k terms in ascending order.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        double* crow = c.data.data() + i * cols;
        const double* arow = a.data.data() + i * inner;
        for (std::size_t p = 0; p < inner; ++p) {
            const double a_ip = arow[p];
            const double* brow = b.data.data() + p * cols;
#pragma omp simd
            for (std::size_t j = 0; j < cols; ++j) {
                crow[j] += a_ip * brow[j];
            }
        }
    }
    return c;
}

CausalAttention causal_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t n_heads, double scale) {
    const std::size_t len = q.rows;
    const std::size_t head_dim = q.cols / n_heads;
    CausalAttention out{Matrix(len, q.cols), std::vector<Matrix>(n_heads, Matrix(len, len))};
    const auto work = static_cast<std::ptrdiff_t>(n_heads * len);

    // Row i of head h costs O(i); dynamic scheduling evens out the triangle.
#pragma omp parallel
    {
        std::vector<double> logits(len);
        std::vector<double> acc(head_dim);
#pragma omp for schedule(dynamic, 8)
        for (std::ptrdiff_t item = 0; item < work; ++item) {
            const std::size_t h = static_cast<std::size_t>(item) / len;
            const std::size_t i = static_cast<std::size_t>(item) % len;
            const std::size_t off = h * head_dim;
            const double* qi = q.data.data() + i * q.cols + off;

            double max_logit = -INFINITY;
            for (std::size_t j = 0; j <= i; ++j) {
                const double* kj = k.data.data() + j * k.cols + off;
                double dot = 0.0;
                for (std::size_t d = 0; d < head_dim; ++d) {
                    dot += qi[d] * kj[d];
                }
                logits[j] = dot * scale;
                max_logit = std::max(max_logit, logits[j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j <= i; ++j) {
                logits[j] = std::exp(logits[j] - max_logit);
                sum += logits[j];
            }
            double* prow = out.probs[h].data.data() + i * len;
            for (std::size_t j = 0; j <= i; ++j) {
                prow[j] = logits[j] / sum;
            }
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t j = 0; j <= i; ++j) {
                const double* vj = v.data.data() + j * v.cols + off;
                const double pj = prow[j];
                for (std::size_t d = 0; d < head_dim; ++d) {
                    acc[d] += pj * vj[d];
                }
            }
            std::copy(acc.begin(), acc.end(), out.output.data.data() + i * q.cols + off);
        }
    }
    return out;
}

void decode_attention(std::span<const double> q, std::span<const CacheLane* const> lanes, double scale,
                      std::span<double> out) {
    const auto n_heads = static_cast<std::ptrdiff_t>(lanes.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t h = 0; h < n_heads; ++h) {
        const CacheLane& lane = *lanes[h];
        const std::size_t head_dim = lane.dim();
        const std::size_t off = static_cast<std::size_t>(h) * head_dim;
        const std::size_t n = lane.size();
        std::vector<double> weights(n);
        double max_logit = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) {
            const double* kj = lane.keys().data() + j * head_dim;
            double dot = 0.0;
            for (std::size_t d = 0; d < head_dim; ++d) {
                dot += q[off + d] * kj[d];
            }
            weights[j] = dot * scale;
            max_logit = std::max(max_logit, weights[j]);
        }
        double sum = 0.0;
        for (auto& w : weights) {
            w = std::exp(w - max_logit);
            sum += w;
        }
        for (auto& w : weights) {
            w /= sum;
        }
        std::vector<double> acc(head_dim, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double* vj = lane.values().data() + j * head_dim;
            for (std::size_t d = 0; d < head_dim; ++d) {
                acc[d] += weights[j] * vj[d];
            }
        }
        std::copy(acc.begin(), acc.end(), out.begin() + static_cast<std::ptrdiff_t>(off));
    }
}

}  // namespace lookm::kernels::omp
