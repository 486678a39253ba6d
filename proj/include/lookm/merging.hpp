// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lookm/core.hpp"
#include "lookm/eviction.hpp"
#include "lookm/kernels.hpp"

namespace lookm {

/**
 * @brief Many-to-one nearest-neighbour matching of evicted keys onto conserved keys.
 *
 * Slots index the evicted and conserved lists passed to match(), not cache rows.
 */
struct SimilarityAssignment {
    std::vector<std::size_t> target;      ///< per evicted slot: conserved slot with the highest cosine
    std::vector<double> similarity;       ///< per evicted slot: cosine to its target, in [-1, 1]
    std::vector<std::vector<std::size_t>> groups;  ///< per conserved slot: matched evicted slots, ascending
    std::size_t zero_norm_pairs = 0;      ///< pairs whose cosine was forced to 0 by a zero-norm key
};

/// Rows are vectors; every row of both matrices must have the same width.
SimilarityAssignment match(const Matrix& evicted_keys, const Matrix& conserved_keys);
/// Matches the lane's evicted keys against its conserved keys.
SimilarityAssignment match(const CacheLane& lane, const EvictionOutcome& outcome);

/// One contribution of an evicted row to a conserved row: new += weight * e - shrink * old.
struct MergeTerm {
    std::size_t conserved_slot;
    std::size_t evicted_slot;
    double weight;
    double shrink;
    bool operator==(const MergeTerm&) const = default;
};

/**
 * @brief Merge of every conserved row with its group, written as
 * new_c = old_c + sum(weight * e - shrink * old_c) over the terms of c.
 *
 * Averaged: weight = shrink = 1/(n+1). Pivotal: weight = shrink = 1/(2(n+1)).
 * Weighted: weight = s/(n+1), shrink = 1/(n+1). Each expands to the usual
 * (old_c + ...)/(n+1) form, but a group identical to its target merges to the target exactly.
 * Built once from the key assignment and applied unchanged to both keys and values.
 */
struct MergeWeights {
    std::size_t n_conserved = 0;
    std::vector<MergeTerm> terms;
};

MergeWeights merge_weights(const SimilarityAssignment& assignment, MergeStrategy strategy);

/// The terms actually applied to keys and to values, for verifying they move together.
struct MergeLog {
    std::vector<MergeTerm> key_terms;
    std::vector<MergeTerm> value_terms;
};

/**
 * Drops the evicted rows and folds them into their targets. Every right-hand side reads
 * pre-merge rows, so the result does not depend on group order.
 */
CacheLane apply_merge(const CacheLane& lane, const EvictionOutcome& outcome, const MergeWeights& weights,
                      MergeLog* log = nullptr);

CacheLane merge_averaged(const CacheLane& lane, const EvictionOutcome& outcome, const SimilarityAssignment& assignment);
CacheLane merge_pivotal(const CacheLane& lane, const EvictionOutcome& outcome, const SimilarityAssignment& assignment);
CacheLane merge_weighted(const CacheLane& lane, const EvictionOutcome& outcome, const SimilarityAssignment& assignment);

}  // namespace lookm
