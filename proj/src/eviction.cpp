// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookm/eviction.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lookm/attention.hpp"

namespace lookm {

std::vector<double> text_prior_boost(std::span<const double> scores, const PromptLayout& layout) {
    if (scores.empty()) {
        throw std::invalid_argument("text_prior_boost: empty score vector");
    }
    if (scores.size() != layout.size()) {
        throw std::invalid_argument("text_prior_boost: score length " + std::to_string(scores.size()) +
                                    " differs from layout length " + std::to_string(layout.size()));
    }
    const double prior = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.begin(), scores.end());
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (layout.is_text(j)) {
            out[j] += prior;
        }
    }
    return out;
}

std::vector<std::size_t> top_n(std::span<const double> scores, std::size_t limit, std::size_t n) {
    limit = std::min(limit, scores.size());
    std::vector<std::size_t> idx(limit);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n < limit) {
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                          [&](std::size_t a, std::size_t b) {
                              return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                          });
        idx.resize(n);
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

namespace {

void check_plan(std::size_t len, const BudgetPlan& plan) {
    if (len == 0) {
        throw std::invalid_argument("eviction: empty score vector");
    }
    if (plan.s_total > len || plan.m_recent > len) {
        throw std::invalid_argument("eviction: budget of " + std::to_string(plan.s_total) +
                                    " tokens exceeds prompt length " + std::to_string(len));
    }
}

EvictionOutcome assemble(std::vector<std::size_t> important, std::size_t len, std::size_t m_recent,
                         std::vector<double> ranked) {
    EvictionOutcome out;
    out.boosted_scores = std::move(ranked);
    out.conserved = std::move(important);
    for (std::size_t j = len - m_recent; j < len; ++j) {
        out.conserved.push_back(j);
    }
    std::vector<bool> keep(len, false);
    for (std::size_t j : out.conserved) {
        keep[j] = true;
    }
    for (std::size_t j = 0; j < len; ++j) {
        if (!keep[j]) {
            out.evicted.push_back(j);
        }
    }
    return out;
}

// Top-N over the non-recent region plus the recent window.
EvictionOutcome select_by_scores(std::vector<double> ranked, const BudgetPlan& plan) {
    const std::size_t len = ranked.size();
    check_plan(len, plan);
    const std::size_t limit = len - plan.m_recent;
    auto important = top_n(ranked, limit, plan.n_important);
    return assemble(std::move(important), len, plan.m_recent, std::move(ranked));
}

}  // namespace

EvictionOutcome select_lookm(std::span<const double> scores, const PromptLayout& layout, const BudgetPlan& plan,
                             const CompressionConfig& config) {
    check_plan(scores.size(), plan);
    if (scores.size() != layout.size()) {
        throw std::invalid_argument("select_lookm: score length differs from layout length");
    }
    std::vector<double> ranked = config.text_prior ? text_prior_boost(scores, layout)
                                                   : std::vector<double>(scores.begin(), scores.end());
    if (config.selection_mode == SelectionMode::TopNOnly) {
        return select_by_scores(std::move(ranked), plan);
    }
    const std::size_t len = scores.size();
    const std::size_t limit = len - plan.m_recent;
    auto important = top_n(ranked, limit, plan.n_important);
    for (std::size_t j = 0; j < limit; ++j) {
        if (layout.is_text(j)) {
            important.push_back(j);
        }
    }
    std::sort(important.begin(), important.end());
    important.erase(std::unique(important.begin(), important.end()), important.end());
    return assemble(std::move(important), len, plan.m_recent, std::move(ranked));
}

EvictionOutcome select_h2o(std::span<const double> scores, const BudgetPlan& plan) {
    return select_by_scores(std::vector<double>(scores.begin(), scores.end()), plan);
}

std::vector<double> mean_attention_scores(const Matrix& probs) {
    std::vector<double> scores = column_scores(probs);
    const std::size_t len = probs.rows;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        scores[j] /= static_cast<double>(len - j);
    }
    return scores;
}

EvictionOutcome select_roco(const Matrix& probs, const BudgetPlan& plan) {
    return select_by_scores(mean_attention_scores(probs), plan);
}

std::vector<double> max_pool(std::span<const double> raw, std::size_t kernel) {
    if (kernel == 0 || kernel % 2 == 0) {
        throw std::invalid_argument("max_pool: kernel must be odd and positive");
    }
    const std::size_t half = kernel / 2;
    std::vector<double> out(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) {
        const std::size_t lo = j >= half ? j - half : 0;
        const std::size_t hi = std::min(raw.size() - 1, j + half);
        out[j] = *std::max_element(raw.begin() + static_cast<std::ptrdiff_t>(lo),
                                   raw.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    }
    return out;
}

std::vector<double> observation_scores(const Matrix& probs, std::size_t window) {
    window = std::min(window, probs.rows);
    std::vector<double> scores(probs.cols, 0.0);
    for (std::size_t i = probs.rows - window; i < probs.rows; ++i) {
        for (std::size_t j = 0; j < probs.cols; ++j) {
            scores[j] += probs(i, j);
        }
    }
    return scores;
}

EvictionOutcome select_snapkv(const Matrix& probs, const BudgetPlan& plan, std::size_t kernel) {
    if (plan.m_recent == 0) {
        throw std::invalid_argument("select_snapkv: observation window (m_recent) must be at least 1");
    }
    return select_by_scores(max_pool(observation_scores(probs, plan.m_recent), kernel), plan);
}

EvictionOutcome select_for_policy(const Matrix& probs, const PromptLayout& layout, const BudgetPlan& plan,
                                  const CompressionConfig& config) {
    switch (config.policy) {
        case Policy::FullCache: {
            EvictionOutcome out;
            out.conserved.resize(probs.rows);
            std::iota(out.conserved.begin(), out.conserved.end(), std::size_t{0});
            out.boosted_scores = column_scores(probs);
            return out;
        }
        case Policy::LookM:
            return select_lookm(column_scores(probs), layout, plan, config);
        case Policy::H2O:
            return select_h2o(column_scores(probs), plan);
        case Policy::SnapKV:
            return select_snapkv(probs, plan, config.snapkv_kernel);
        case Policy::RoCo:
            return select_roco(probs, plan);
    }
    throw std::logic_error("select_for_policy: unhandled policy");
}

}  // namespace lookm
