// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookm/merging.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lookm {

namespace {

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

Matrix gather_keys(const CacheLane& lane, std::span<const std::size_t> rows) {
    Matrix m(rows.size(), lane.dim());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto key = lane.key(rows[r]);
        std::copy(key.begin(), key.end(), m.row(r).begin());
    }
    return m;
}

}  // namespace

SimilarityAssignment match(const Matrix& evicted_keys, const Matrix& conserved_keys) {
    if (evicted_keys.rows == 0 || conserved_keys.rows == 0) {
        throw std::invalid_argument("match: evicted and conserved key lists must be non-empty");
    }
    if (evicted_keys.cols != conserved_keys.cols) {
        throw std::invalid_argument("match: evicted and conserved keys differ in dimension");
    }
    const std::size_t n_evicted = evicted_keys.rows;
    const std::size_t n_conserved = conserved_keys.rows;

    std::vector<double> conserved_norms(n_conserved);
    for (std::size_t j = 0; j < n_conserved; ++j) {
        conserved_norms[j] = norm(conserved_keys.row(j));
    }

    SimilarityAssignment out;
    out.target.resize(n_evicted);
    out.similarity.resize(n_evicted);
    out.groups.resize(n_conserved);
    for (std::size_t i = 0; i < n_evicted; ++i) {
        const auto ki = evicted_keys.row(i);
        const double ni = norm(ki);
        std::size_t best = 0;
        double best_sim = -INFINITY;
        for (std::size_t j = 0; j < n_conserved; ++j) {
            double sim = 0.0;
            if (ni == 0.0 || conserved_norms[j] == 0.0) {
                ++out.zero_norm_pairs;
            } else {
                const auto kj = conserved_keys.row(j);
                double dot = 0.0;
                for (std::size_t d = 0; d < ki.size(); ++d) {
                    dot += ki[d] * kj[d];
                }
                sim = std::clamp(dot / (ni * conserved_norms[j]), -1.0, 1.0);
            }
            if (sim > best_sim) {
                best_sim = sim;
                best = j;
            }
        }
        out.target[i] = best;
        out.similarity[i] = best_sim;
        out.groups[best].push_back(i);
    }
    return out;
}

SimilarityAssignment match(const CacheLane& lane, const EvictionOutcome& outcome) {
    return match(gather_keys(lane, outcome.evicted), gather_keys(lane, outcome.conserved));
}

MergeWeights merge_weights(const SimilarityAssignment& assignment, MergeStrategy strategy) {
    MergeWeights w;
    w.n_conserved = assignment.groups.size();
    if (strategy == MergeStrategy::None) {
        return w;
    }
    for (std::size_t c = 0; c < w.n_conserved; ++c) {
        const auto& group = assignment.groups[c];
        const double inv = 1.0 / (static_cast<double>(group.size()) + 1.0);
        for (std::size_t e : group) {
            switch (strategy) {
                case MergeStrategy::Averaged:
                    w.terms.push_back({c, e, inv, inv});
                    break;
                case MergeStrategy::Pivotal:
                    // Pivotal token (e + c) / 2 enters the average in place of e.
                    w.terms.push_back({c, e, 0.5 * inv, 0.5 * inv});
                    break;
                case MergeStrategy::Weighted:
                    w.terms.push_back({c, e, assignment.similarity[e] * inv, inv});
                    break;
                case MergeStrategy::None:
                    break;
            }
        }
    }
    return w;
}

CacheLane apply_merge(const CacheLane& lane, const EvictionOutcome& outcome, const MergeWeights& weights,
                      MergeLog* log) {
    if (weights.n_conserved != outcome.conserved.size()) {
        throw std::invalid_argument("apply_merge: weights were built for a different conserved set");
    }
    CacheLane out = lane.gather(outcome.conserved);
    const std::size_t dim = lane.dim();
    for (const MergeTerm& t : weights.terms) {
        const std::size_t src_row = outcome.evicted.at(t.evicted_slot);
        const std::size_t old_row = outcome.conserved.at(t.conserved_slot);
        const auto src_key = lane.key(src_row);
        const auto old_key = lane.key(old_row);
        auto dst_key = out.key(t.conserved_slot);
        for (std::size_t d = 0; d < dim; ++d) {
            dst_key[d] += t.weight * src_key[d] - t.shrink * old_key[d];
        }
        if (log) {
            log->key_terms.push_back(t);
        }
        const auto src_value = lane.value(src_row);
        const auto old_value = lane.value(old_row);
        auto dst_value = out.value(t.conserved_slot);
        for (std::size_t d = 0; d < dim; ++d) {
            dst_value[d] += t.weight * src_value[d] - t.shrink * old_value[d];
        }
        if (log) {
            log->value_terms.push_back(t);
        }
    }
    return out;
}

CacheLane merge_averaged(const CacheLane& lane, const EvictionOutcome& outcome, const SimilarityAssignment& assignment) {
    return apply_merge(lane, outcome, merge_weights(assignment, MergeStrategy::Averaged));
}

CacheLane merge_pivotal(const CacheLane& lane, const EvictionOutcome& outcome, const SimilarityAssignment& assignment) {
    return apply_merge(lane, outcome, merge_weights(assignment, MergeStrategy::Pivotal));
}

CacheLane merge_weighted(const CacheLane& lane, const EvictionOutcome& outcome, const SimilarityAssignment& assignment) {
    return apply_merge(lane, outcome, merge_weights(assignment, MergeStrategy::Weighted));
}

}  // namespace lookm
