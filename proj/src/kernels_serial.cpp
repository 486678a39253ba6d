// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

// Straightforward reference kernels. Kept deliberately plain: they are the yardstick the
// OpenMP versions are tested and benchmarked against.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lookm/kernels.hpp"

namespace lookm::kernels::serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimensions differ");
    }
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < a.cols; ++p) {
                acc += a(i, p) * b(p, j);
            }
            c(i, j) = acc;
        }
    }
    return c;
}

CausalAttention causal_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t n_heads, double scale) {
    const std::size_t len = q.rows;
    const std::size_t head_dim = q.cols / n_heads;
    CausalAttention out{Matrix(len, q.cols), std::vector<Matrix>(n_heads, Matrix(len, len))};
    std::vector<double> logits(len);
    for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t off = h * head_dim;
        Matrix& p = out.probs[h];
        for (std::size_t i = 0; i < len; ++i) {
            double max_logit = -INFINITY;
            for (std::size_t j = 0; j <= i; ++j) {
                double dot = 0.0;
                for (std::size_t d = 0; d < head_dim; ++d) {
                    dot += q(i, off + d) * k(j, off + d);
                }
                logits[j] = dot * scale;
                max_logit = std::max(max_logit, logits[j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j <= i; ++j) {
                logits[j] = std::exp(logits[j] - max_logit);
                sum += logits[j];
            }
            for (std::size_t j = 0; j <= i; ++j) {
                p(i, j) = logits[j] / sum;
            }
            for (std::size_t d = 0; d < head_dim; ++d) {
                double acc = 0.0;
                for (std::size_t j = 0; j <= i; ++j) {
                    acc += p(i, j) * v(j, off + d);
                }
                out.output(i, off + d) = acc;
            }
        }
    }
    return out;
}

void decode_attention(std::span<const double> q, std::span<const CacheLane* const> lanes, double scale,
                      std::span<double> out) {
    for (std::size_t h = 0; h < lanes.size(); ++h) {
        const CacheLane& lane = *lanes[h];
        const std::size_t head_dim = lane.dim();
        const std::size_t off = h * head_dim;
        std::vector<double> weights(lane.size());
        double max_logit = -INFINITY;
        for (std::size_t j = 0; j < lane.size(); ++j) {
            const auto key = lane.key(j);
            double dot = 0.0;
            for (std::size_t d = 0; d < head_dim; ++d) {
                dot += q[off + d] * key[d];
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
        for (std::size_t d = 0; d < head_dim; ++d) {
            double acc = 0.0;
            for (std::size_t j = 0; j < lane.size(); ++j) {
                acc += weights[j] * lane.value(j)[d];
            }
            out[off + d] = acc;
        }
    }
}

}  // namespace lookm::kernels::serial
