// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookm/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lookm {

double ModelSpec::softmax_scale() const {
    return 1.0 / std::sqrt(static_cast<double>(head_dim()));
}

void ModelSpec::validate() const {
    if (n_layers == 0 || n_heads == 0 || d_model == 0) {
        throw std::invalid_argument("ModelSpec: layers, heads and d_model must be positive");
    }
    if (d_model % n_heads != 0) {
        throw std::invalid_argument("ModelSpec: d_model " + std::to_string(d_model) + " is not divisible by heads " +
                                    std::to_string(n_heads));
    }
}

Model::Model(const ModelSpec& spec) : m_spec(spec) {
    spec.validate();
    Rng rng = make_rng(spec.weight_seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.d_model));
    auto draw = [&] {
        Matrix w(spec.d_model, spec.d_model);
        for (auto& x : w.data) {
            x = rng.uniform(-bound, bound);
        }
        return w;
    };
    m_layers.reserve(spec.n_layers);
    for (std::size_t l = 0; l < spec.n_layers; ++l) {
        LayerWeights w;
        w.wq = draw();
        w.wk = draw();
        w.wv = draw();
        w.wo = draw();
        m_layers.push_back(std::move(w));
    }
}

std::vector<double> Model::position_code(std::size_t position) const {
    std::vector<double> code(m_spec.d_model, 0.0);
    if (!m_spec.positional) {
        return code;
    }
    const double pos = static_cast<double>(position);
    for (std::size_t i = 0; i < m_spec.d_model; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(m_spec.d_model));
        code[i] = i % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq);
    }
    return code;
}

namespace {

Matrix row_matrix(std::span<const double> v) {
    Matrix m(1, v.size());
    std::copy(v.begin(), v.end(), m.data.begin());
    return m;
}

}  // namespace

PrefillResult prefill(const Model& model, const Matrix& embeddings, const PromptLayout& layout, Exec exec) {
    const ModelSpec& spec = model.spec();
    if (embeddings.rows == 0) {
        throw std::invalid_argument("prefill: prompt must contain at least one token");
    }
    if (embeddings.cols != spec.d_model) {
        throw std::invalid_argument("prefill: embedding width " + std::to_string(embeddings.cols) +
                                    " does not match d_model " + std::to_string(spec.d_model));
    }
    if (embeddings.rows != layout.size()) {
        throw std::invalid_argument("prefill: " + std::to_string(embeddings.rows) + " embedding rows but layout has " +
                                    std::to_string(layout.size()) + " positions");
    }
    const std::size_t len = embeddings.rows;
    const std::size_t head_dim = spec.head_dim();

    PrefillResult result{KvCache(spec.n_layers, spec.n_heads, head_dim), AttentionRecord(spec.n_layers, spec.n_heads),
                         embeddings};
    Matrix& hidden = result.hidden;
    if (spec.positional) {
        for (std::size_t i = 0; i < len; ++i) {
            const auto code = model.position_code(i);
            for (std::size_t d = 0; d < spec.d_model; ++d) {
                hidden(i, d) += code[d];
            }
        }
    }

    for (std::size_t l = 0; l < spec.n_layers; ++l) {
        const LayerWeights& w = model.layer(l);
        const Matrix q = kernels::matmul(hidden, w.wq, exec);
        const Matrix k = kernels::matmul(hidden, w.wk, exec);
        const Matrix v = kernels::matmul(hidden, w.wv, exec);
        CausalAttention attn = kernels::causal_attention(q, k, v, spec.n_heads, spec.softmax_scale(), exec);

        for (std::size_t h = 0; h < spec.n_heads; ++h) {
            CacheLane& lane = result.cache.lane(l, h);
            const std::size_t off = h * head_dim;
            for (std::size_t i = 0; i < len; ++i) {
                lane.append(k.row(i).subspan(off, head_dim), v.row(i).subspan(off, head_dim), i);
            }
            result.record.lane(l, h) = std::move(attn.probs[h]);
        }

        const Matrix projected = kernels::matmul(attn.output, w.wo, exec);
        for (std::size_t i = 0; i < hidden.data.size(); ++i) {
            hidden.data[i] += projected.data[i];
        }
    }
    result.cache.set_next_position(len);
    return result;
}

std::vector<double> decode_step(const Model& model, KvCache& cache, std::span<const double> input, Exec exec) {
    const ModelSpec& spec = model.spec();
    if (input.size() != spec.d_model) {
        throw std::invalid_argument("decode_step: input has " + std::to_string(input.size()) + " entries, expected " +
                                    std::to_string(spec.d_model));
    }
    if (cache.n_layers() != spec.n_layers || cache.n_heads() != spec.n_heads || cache.head_dim() != spec.head_dim()) {
        throw std::invalid_argument("decode_step: cache shape does not match the model");
    }
    for (std::size_t f = 0; f < cache.n_lanes(); ++f) {
        const CacheLane& lane = cache.lane(f);
        if (lane.keys().size() != lane.size() * lane.dim() || lane.values().size() != lane.keys().size()) {
            throw std::invalid_argument("decode_step: lane " + std::to_string(f) +
                                        " has mismatched key/value/position lengths");
        }
    }

    const std::size_t head_dim = spec.head_dim();
    const std::size_t position = cache.next_position();
    Matrix x = row_matrix(input);
    if (spec.positional) {
        const auto code = model.position_code(position);
        for (std::size_t d = 0; d < spec.d_model; ++d) {
            x(0, d) += code[d];
        }
    }

    std::vector<const CacheLane*> lanes(spec.n_heads);
    Matrix attn(1, spec.d_model);
    for (std::size_t l = 0; l < spec.n_layers; ++l) {
        const LayerWeights& w = model.layer(l);
        const Matrix q = kernels::serial::matmul(x, w.wq);
        const Matrix k = kernels::serial::matmul(x, w.wk);
        const Matrix v = kernels::serial::matmul(x, w.wv);
        for (std::size_t h = 0; h < spec.n_heads; ++h) {
            CacheLane& lane = cache.lane(l, h);
            const std::size_t off = h * head_dim;
            lane.append(k.row(0).subspan(off, head_dim), v.row(0).subspan(off, head_dim), position);
            lanes[h] = &lane;
        }
        kernels::decode_attention(q.row(0), lanes, spec.softmax_scale(), attn.row(0), exec);
        const Matrix projected = kernels::serial::matmul(attn, w.wo);
        for (std::size_t d = 0; d < spec.d_model; ++d) {
            x(0, d) += projected(0, d);
        }
    }
    cache.set_next_position(position + 1);
    return x.data;
}

DecodeTrace decode(const Model& model, KvCache& cache, std::span<const double> first_input, std::size_t steps,
                   Exec exec) {
    DecodeTrace trace;
    std::vector<double> input(first_input.begin(), first_input.end());
    for (std::size_t t = 0; t < steps; ++t) {
        input = decode_step(model, cache, input, exec);
        trace.outputs.push_back(input);
        trace.cache_lengths.push_back(cache.lane(0).size());
    }
    return trace;
}

std::vector<double> column_scores(const Matrix& probs) {
    std::vector<double> scores(probs.cols, 0.0);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        for (std::size_t j = 0; j < probs.cols; ++j) {
            scores[j] += probs(i, j);
        }
    }
    return scores;
}

std::vector<std::vector<double>> column_scores(const AttentionRecord& record) {
    std::vector<std::vector<double>> out;
    out.reserve(record.n_lanes());
    for (std::size_t f = 0; f < record.n_lanes(); ++f) {
        out.push_back(column_scores(record.lane(f)));
    }
    return out;
}

}  // namespace lookm
