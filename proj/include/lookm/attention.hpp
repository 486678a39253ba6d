// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lookm/core.hpp"
#include "lookm/kernels.hpp"

namespace lookm {

/**
 * @brief Shape of the toy transformer.
 *
 * Each layer is causal multi-head attention followed by an output projection and a
 * residual add. There is no MLP or normalization. With `positional` set, a sinusoidal
 * position code is added to the input embeddings.
 */
struct ModelSpec {
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t d_model = 32;
    std::uint64_t weight_seed = 0;
    bool positional = false;

    std::size_t head_dim() const { return d_model / n_heads; }
    /// 1 / sqrt(head_dim); shared by the model and every test oracle.
    double softmax_scale() const;
    void validate() const;
};

/// Projection weights, all d_model x d_model, drawn uniform in +-1/sqrt(d_model).
struct LayerWeights {
    Matrix wq, wk, wv, wo;
};

class Model {
public:
    explicit Model(const ModelSpec& spec);

    const ModelSpec& spec() const { return m_spec; }
    const LayerWeights& layer(std::size_t i) const { return m_layers.at(i); }

    /// Sinusoidal code for one position (zeros when the spec has no positional flag).
    std::vector<double> position_code(std::size_t position) const;

private:
    ModelSpec m_spec;
    std::vector<LayerWeights> m_layers;
};

/// Prefill attention probabilities, one L x L matrix per (layer, head) lane.
class AttentionRecord {
public:
    AttentionRecord() = default;
    AttentionRecord(std::size_t n_layers, std::size_t n_heads) : m_heads(n_heads), m_probs(n_layers * n_heads) {}

    std::size_t n_lanes() const { return m_probs.size(); }
    std::size_t n_layers() const { return m_heads == 0 ? 0 : m_probs.size() / m_heads; }
    std::size_t n_heads() const { return m_heads; }
    std::size_t prompt_len() const { return m_probs.empty() ? 0 : m_probs.front().rows; }

    Matrix& lane(std::size_t layer, std::size_t head) { return m_probs.at(layer * m_heads + head); }
    const Matrix& lane(std::size_t layer, std::size_t head) const { return m_probs.at(layer * m_heads + head); }
    const Matrix& lane(std::size_t flat) const { return m_probs.at(flat); }

private:
    std::size_t m_heads = 0;
    std::vector<Matrix> m_probs;
};

struct PrefillResult {
    KvCache cache;
    AttentionRecord record;
    Matrix hidden;  ///< final-layer hidden states, L x d_model
};

/// Output vectors of consecutive decode steps and the lane-0 cache length seen by each.
struct DecodeTrace {
    std::vector<std::vector<double>> outputs;
    std::vector<std::size_t> cache_lengths;
};

/// Encodes a prompt, filling a fresh cache and capturing every lane's attention matrix.
PrefillResult prefill(const Model& model, const Matrix& embeddings, const PromptLayout& layout,
                      Exec exec = Exec::Parallel);

/**
 * Generates one token's output. Appends the token's key/value to every lane (at
 * cache.next_position()) and attends over everything cached. The cache is updated in place.
 */
std::vector<double> decode_step(const Model& model, KvCache& cache, std::span<const double> input,
                                Exec exec = Exec::Parallel);

/// Free-running decode: each step's output is the next step's input.
DecodeTrace decode(const Model& model, KvCache& cache, std::span<const double> first_input, std::size_t steps,
                   Exec exec = Exec::Parallel);

/// Cumulative attention received by each prompt position: column sums over all rows.
std::vector<double> column_scores(const Matrix& probs);
std::vector<std::vector<double>> column_scores(const AttentionRecord& record);

}  // namespace lookm
