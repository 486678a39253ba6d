// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "lookm/attention.hpp"
#include "lookm/core.hpp"
#include "lookm/eviction.hpp"
#include "lookm/merging.hpp"

namespace lookm {

struct CompressionStats {
    BudgetPlan plan;
    std::vector<std::size_t> lane_sizes;  ///< conserved entries per lane, lane-major (layer * heads + head)
    std::size_t evicted_total = 0;
    std::size_t negative_weights = 0;     ///< weighted-merge terms with a negative similarity
    std::size_t weighted_terms = 0;
    std::size_t zero_norm_pairs = 0;

    double negative_weight_fraction() const {
        return weighted_terms == 0 ? 0.0 : static_cast<double>(negative_weights) / static_cast<double>(weighted_terms);
    }
};

struct CompressedCache {
    KvCache cache;
    CompressionStats stats;
};

/// Evicts then merges one lane. `lane` must be a freshly prefilled lane (row index == position).
CacheLane compress_lane(const CacheLane& lane, const EvictionOutcome& outcome, MergeStrategy merge,
                        CompressionStats* stats = nullptr);

/**
 * Compresses a freshly prefilled cache once, lane by lane, according to `config`.
 * Lanes are independent and run concurrently under Exec::Parallel.
 *
 * Throws InfeasibleBudget when the minimum-one rounding of the budget does not fit the
 * prompt, or when a lane ends up with a size other than the planned M + N.
 */
CompressedCache compress_cache(const KvCache& cache, const AttentionRecord& record, const PromptLayout& layout,
                               const CompressionConfig& config, Exec exec = Exec::Parallel);

}  // namespace lookm
