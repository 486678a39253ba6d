// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lookm {

/// Thrown when a compression budget cannot be honored for a cache lane.
class InfeasibleBudget : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TokenKind : std::uint8_t { Text, Image };

std::string_view to_string(TokenKind kind);

/**
 * @brief Modality labels for every position of an interleaved text/image prompt.
 *
 * Segment boundaries are the positions where the modality changes; they are derived
 * from the labels so the two can never disagree.
 */
class PromptLayout {
public:
    explicit PromptLayout(std::vector<TokenKind> kinds);

    std::size_t size() const { return m_kinds.size(); }
    TokenKind kind(std::size_t pos) const { return m_kinds.at(pos); }
    bool is_text(std::size_t pos) const { return m_kinds.at(pos) == TokenKind::Text; }
    const std::vector<TokenKind>& kinds() const { return m_kinds; }
    const std::vector<std::size_t>& segment_boundaries() const { return m_boundaries; }

    std::vector<std::size_t> text_indices() const;
    std::vector<std::size_t> image_indices() const;

private:
    std::vector<TokenKind> m_kinds;
    std::vector<std::size_t> m_boundaries;
};

/**
 * @brief One (layer, head) slice of a KV cache.
 *
 * Keys and values are stored row-major with `dim` scalars per row. `positions` holds the
 * original prompt/decode position of every row and is strictly increasing.
 */
class CacheLane {
public:
    CacheLane() = default;
    explicit CacheLane(std::size_t dim) : m_dim(dim) {}

    std::size_t dim() const { return m_dim; }
    std::size_t size() const { return m_positions.size(); }
    bool empty() const { return m_positions.empty(); }

    std::span<const double> key(std::size_t row) const { return {m_keys.data() + row * m_dim, m_dim}; }
    std::span<const double> value(std::size_t row) const { return {m_values.data() + row * m_dim, m_dim}; }
    std::span<double> key(std::size_t row) { return {m_keys.data() + row * m_dim, m_dim}; }
    std::span<double> value(std::size_t row) { return {m_values.data() + row * m_dim, m_dim}; }
    std::size_t position(std::size_t row) const { return m_positions[row]; }

    const std::vector<double>& keys() const { return m_keys; }
    const std::vector<double>& values() const { return m_values; }
    const std::vector<std::size_t>& positions() const { return m_positions; }

    /// Appends one KV pair; `position` must exceed every stored position.
    void append(std::span<const double> key, std::span<const double> value, std::size_t position);

    /// Rows at the given (sorted, unique) row indices, in order.
    CacheLane gather(std::span<const std::size_t> rows) const;

    bool operator==(const CacheLane&) const = default;

private:
    std::size_t m_dim = 0;
    std::vector<double> m_keys;
    std::vector<double> m_values;
    std::vector<std::size_t> m_positions;
};

/// Layers x heads grid of lanes plus the position the next decoded token will take.
class KvCache {
public:
    KvCache() = default;
    KvCache(std::size_t n_layers, std::size_t n_heads, std::size_t head_dim);

    std::size_t n_layers() const { return m_layers; }
    std::size_t n_heads() const { return m_heads; }
    std::size_t n_lanes() const { return m_lanes.size(); }
    std::size_t head_dim() const { return m_head_dim; }

    CacheLane& lane(std::size_t layer, std::size_t head) { return m_lanes.at(layer * m_heads + head); }
    const CacheLane& lane(std::size_t layer, std::size_t head) const { return m_lanes.at(layer * m_heads + head); }
    CacheLane& lane(std::size_t flat) { return m_lanes.at(flat); }
    const CacheLane& lane(std::size_t flat) const { return m_lanes.at(flat); }

    std::size_t next_position() const { return m_next_position; }
    void set_next_position(std::size_t pos) { m_next_position = pos; }

    /// Sum of lane lengths (KV entries held across the whole cache).
    std::size_t total_entries() const;

    /// True when every lane has the same length.
    bool uniform_length() const;

    bool operator==(const KvCache&) const = default;

private:
    std::size_t m_layers = 0;
    std::size_t m_heads = 0;
    std::size_t m_head_dim = 0;
    std::size_t m_next_position = 0;
    std::vector<CacheLane> m_lanes;
};

enum class Policy : std::uint8_t { FullCache, LookM, H2O, SnapKV, RoCo };
enum class MergeStrategy : std::uint8_t { None, Averaged, Pivotal, Weighted };
enum class SelectionMode : std::uint8_t { TopNOnly, UnionTextTopN };
enum class TieBreak : std::uint8_t { LowerIndex };

std::string_view to_string(Policy policy);
std::string_view to_string(MergeStrategy merge);
std::string_view to_string(SelectionMode mode);
/// Inverse of to_string; throws std::invalid_argument on unknown names.
Policy parse_policy(std::string_view name);
MergeStrategy parse_merge(std::string_view name);
SelectionMode parse_selection_mode(std::string_view name);

struct CompressionConfig {
    Policy policy = Policy::LookM;
    double alpha1 = 0.1;
    double alpha2 = 0.1;
    MergeStrategy merge = MergeStrategy::Pivotal;
    bool text_prior = true;
    SelectionMode selection_mode = SelectionMode::TopNOnly;
    TieBreak tie_break = TieBreak::LowerIndex;
    std::size_t snapkv_kernel = 5;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument naming the first violated invariant.
    void validate() const;
};

struct BudgetPlan {
    std::size_t m_recent = 0;
    std::size_t n_important = 0;
    std::size_t s_total = 0;
    /// Set when the minimum-one rounding pushed M + N past the prompt length and N had to shrink.
    bool clamped = false;
};

/**
 * Recent-window and important-token counts for a prompt of `prompt_len` tokens.
 *
 * M = max(1, floor(alpha1 * L)), N = max(1, floor(alpha2 * L)), then N (and if needed M)
 * shrink so M + N <= L. The same counts apply to every lane.
 */
BudgetPlan plan_budget(const CompressionConfig& config, std::size_t prompt_len);

/**
 * @brief Seeded random stream with a fixed, platform-independent algorithm.
 *
 * Bits come from std::mt19937_64 (whose output sequence is fixed by the C++ standard).
 * Uniform reals use the top 53 bits; normals use Box-Muller on two uniforms. The standard
 * library distributions are deliberately not used since their algorithms vary by vendor.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : m_engine(seed) {}

    std::uint64_t next_u64() { return m_engine(); }
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal.
    double normal();

private:
    std::mt19937_64 m_engine;
    double m_spare = 0.0;
    bool m_has_spare = false;
};

inline Rng make_rng(std::uint64_t seed) {
    return Rng(seed);
}

}  // namespace lookm
