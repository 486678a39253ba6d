// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookm/compress.hpp"

#include <omp.h>

#include <exception>
#include <string>

namespace lookm {

CacheLane compress_lane(const CacheLane& lane, const EvictionOutcome& outcome, MergeStrategy merge,
                        CompressionStats* stats) {
    if (outcome.evicted.empty()) {
        return lane.gather(outcome.conserved);
    }
    if (merge == MergeStrategy::None) {
        if (stats) {
            stats->evicted_total += outcome.evicted.size();
        }
        return lane.gather(outcome.conserved);
    }
    const SimilarityAssignment assignment = match(lane, outcome);
    if (stats) {
        stats->evicted_total += outcome.evicted.size();
        stats->zero_norm_pairs += assignment.zero_norm_pairs;
        if (merge == MergeStrategy::Weighted) {
            stats->weighted_terms += assignment.similarity.size();
            for (double s : assignment.similarity) {
                stats->negative_weights += s < 0.0 ? 1 : 0;
            }
        }
    }
    return apply_merge(lane, outcome, merge_weights(assignment, merge));
}

namespace {

std::string lane_name(const KvCache& cache, std::size_t flat) {
    return "lane (layer " + std::to_string(flat / cache.n_heads()) + ", head " +
           std::to_string(flat % cache.n_heads()) + ")";
}

}  // namespace

CompressedCache compress_cache(const KvCache& cache, const AttentionRecord& record, const PromptLayout& layout,
                               const CompressionConfig& config, Exec exec) {
    config.validate();
    const std::size_t len = layout.size();
    if (record.n_lanes() != cache.n_lanes() || record.prompt_len() != len) {
        throw std::invalid_argument("compress_cache: attention record does not match cache and layout");
    }
    for (std::size_t f = 0; f < cache.n_lanes(); ++f) {
        if (cache.lane(f).size() != len) {
            throw std::invalid_argument("compress_cache: " + lane_name(cache, f) + " holds " +
                                        std::to_string(cache.lane(f).size()) + " entries, expected a fresh prefill of " +
                                        std::to_string(len));
        }
    }

    CompressedCache out{cache, {}};
    out.stats.plan = config.policy == Policy::FullCache ? BudgetPlan{0, len, len, false} : plan_budget(config, len);
    const BudgetPlan& plan = out.stats.plan;
    if (plan.clamped) {
        throw InfeasibleBudget(lane_name(cache, 0) + ": m_recent=" + std::to_string(plan.m_recent) +
                               " plus the minimum n_important=1 exceeds prompt_len=" + std::to_string(len) +
                               " (alpha1=" + std::to_string(config.alpha1) +
                               ", alpha2=" + std::to_string(config.alpha2) + ")");
    }

    const auto n_lanes = static_cast<std::ptrdiff_t>(cache.n_lanes());
    std::vector<CompressionStats> per_lane(cache.n_lanes());
    std::vector<std::exception_ptr> errors(cache.n_lanes());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (std::ptrdiff_t f = 0; f < n_lanes; ++f) {
        const auto flat = static_cast<std::size_t>(f);
        try {
            const EvictionOutcome outcome = select_for_policy(record.lane(flat), layout, plan, config);
            out.cache.lane(flat) = compress_lane(cache.lane(flat), outcome, config.merge, &per_lane[flat]);
        } catch (...) {
            errors[flat] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    out.stats.lane_sizes.resize(cache.n_lanes());
    for (std::size_t f = 0; f < cache.n_lanes(); ++f) {
        const std::size_t size = out.cache.lane(f).size();
        out.stats.lane_sizes[f] = size;
        const bool exact = config.policy != Policy::LookM || config.selection_mode == SelectionMode::TopNOnly;
        if (exact && size != plan.s_total) {
            throw InfeasibleBudget(lane_name(cache, f) + ": kept " + std::to_string(size) + " entries but the plan is " +
                                   std::to_string(plan.m_recent) + " recent + " + std::to_string(plan.n_important) +
                                   " important of " + std::to_string(len));
        }
        out.stats.evicted_total += per_lane[f].evicted_total;
        out.stats.negative_weights += per_lane[f].negative_weights;
        out.stats.weighted_terms += per_lane[f].weighted_terms;
        out.stats.zero_norm_pairs += per_lane[f].zero_norm_pairs;
    }
    return out;
}

}  // namespace lookm
