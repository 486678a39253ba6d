// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lookm/core.hpp"
#include "lookm/kernels.hpp"

namespace lookm {

/**
 * @brief Which prompt rows of one lane survive eviction.
 *
 * Indices are lane rows; right after prefill a row index equals the original position.
 * `conserved` and `evicted` are sorted and together partition [0, L).
 */
struct EvictionOutcome {
    std::vector<std::size_t> conserved;
    std::vector<std::size_t> evicted;
    /// Scores Top-N selection ranked, after any text-prior adjustment (length L).
    std::vector<double> boosted_scores;
};

/// Adds the maximum score to every text position.
std::vector<double> text_prior_boost(std::span<const double> scores, const PromptLayout& layout);

/**
 * Indices of the `n` highest scores among positions [0, limit), returned ascending.
 * Higher score wins; equal scores go to the lower index. If n >= limit the whole
 * region is returned.
 */
std::vector<std::size_t> top_n(std::span<const double> scores, std::size_t limit, std::size_t n);

/**
 * Text-prior eviction: the last M positions are kept, then the N best (boosted) scores
 * among the rest. In UnionTextTopN mode every non-recent text position is kept as well,
 * which can exceed the M + N budget.
 */
EvictionOutcome select_lookm(std::span<const double> scores, const PromptLayout& layout, const BudgetPlan& plan,
                             const CompressionConfig& config);

/// Heavy-hitter baseline: cumulative scores, no text prior.
EvictionOutcome select_h2o(std::span<const double> scores, const BudgetPlan& plan);

/// Column sum divided by the number of rows that can attend to the column.
std::vector<double> mean_attention_scores(const Matrix& probs);
EvictionOutcome select_roco(const Matrix& probs, const BudgetPlan& plan);

/// Same-length 1-D max pooling; the window is truncated at both edges.
std::vector<double> max_pool(std::span<const double> raw, std::size_t kernel);
/// Column sums over the last `window` rows only.
std::vector<double> observation_scores(const Matrix& probs, std::size_t window);
EvictionOutcome select_snapkv(const Matrix& probs, const BudgetPlan& plan, std::size_t kernel);

/// Runs the selection rule of `config.policy` for one lane (FullCache keeps everything).
EvictionOutcome select_for_policy(const Matrix& probs, const PromptLayout& layout, const BudgetPlan& plan,
                                  const CompressionConfig& config);

}  // namespace lookm
