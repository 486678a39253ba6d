// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookm/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lookm {

std::string_view to_string(TokenKind kind) {
    return kind == TokenKind::Text ? "text" : "image";
}

PromptLayout::PromptLayout(std::vector<TokenKind> kinds) : m_kinds(std::move(kinds)) {
    if (m_kinds.empty()) {
        throw std::invalid_argument("PromptLayout: prompt must contain at least one token");
    }
    for (std::size_t i = 1; i < m_kinds.size(); ++i) {
        if (m_kinds[i] != m_kinds[i - 1]) {
            m_boundaries.push_back(i);
        }
    }
}

std::vector<std::size_t> PromptLayout::text_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m_kinds.size(); ++i) {
        if (m_kinds[i] == TokenKind::Text) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> PromptLayout::image_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m_kinds.size(); ++i) {
        if (m_kinds[i] == TokenKind::Image) {
            out.push_back(i);
        }
    }
    return out;
}

void CacheLane::append(std::span<const double> key, std::span<const double> value, std::size_t position) {
    if (key.size() != m_dim || value.size() != m_dim) {
        throw std::invalid_argument("CacheLane::append: row width does not match lane dimension");
    }
    if (!m_positions.empty() && position <= m_positions.back()) {
        throw std::invalid_argument("CacheLane::append: positions must be strictly increasing");
    }
    m_keys.insert(m_keys.end(), key.begin(), key.end());
    m_values.insert(m_values.end(), value.begin(), value.end());
    m_positions.push_back(position);
}

CacheLane CacheLane::gather(std::span<const std::size_t> rows) const {
    CacheLane out(m_dim);
    out.m_keys.reserve(rows.size() * m_dim);
    out.m_values.reserve(rows.size() * m_dim);
    out.m_positions.reserve(rows.size());
    for (std::size_t r : rows) {
        out.append(key(r), value(r), m_positions.at(r));
    }
    return out;
}

KvCache::KvCache(std::size_t n_layers, std::size_t n_heads, std::size_t head_dim)
    : m_layers(n_layers), m_heads(n_heads), m_head_dim(head_dim), m_lanes(n_layers * n_heads, CacheLane(head_dim)) {}

std::size_t KvCache::total_entries() const {
    std::size_t total = 0;
    for (const auto& lane : m_lanes) {
        total += lane.size();
    }
    return total;
}

bool KvCache::uniform_length() const {
    return std::all_of(m_lanes.begin(), m_lanes.end(), [&](const CacheLane& l) {
        return l.size() == m_lanes.front().size();
    });
}

namespace {

template <typename Enum, std::size_t N>
Enum parse_named(std::string_view name, const std::pair<std::string_view, Enum> (&table)[N], const char* what) {
    for (const auto& [key, value] : table) {
        if (key == name) {
            return value;
        }
    }
    throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

constexpr std::pair<std::string_view, Policy> kPolicies[] = {
    {"full", Policy::FullCache}, {"lookm", Policy::LookM}, {"h2o", Policy::H2O},
    {"snapkv", Policy::SnapKV},  {"roco", Policy::RoCo},
};
constexpr std::pair<std::string_view, MergeStrategy> kMerges[] = {
    {"none", MergeStrategy::None},
    {"averaged", MergeStrategy::Averaged},
    {"pivotal", MergeStrategy::Pivotal},
    {"weighted", MergeStrategy::Weighted},
};
constexpr std::pair<std::string_view, SelectionMode> kModes[] = {
    {"topn", SelectionMode::TopNOnly},
    {"union", SelectionMode::UnionTextTopN},
};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum value, const std::pair<std::string_view, Enum> (&table)[N]) {
    for (const auto& [key, v] : table) {
        if (v == value) {
            return key;
        }
    }
    return "?";
}

}  // namespace

std::string_view to_string(Policy policy) {
    return name_of(policy, kPolicies);
}
std::string_view to_string(MergeStrategy merge) {
    return name_of(merge, kMerges);
}
std::string_view to_string(SelectionMode mode) {
    return name_of(mode, kModes);
}
Policy parse_policy(std::string_view name) {
    return parse_named(name, kPolicies, "policy");
}
MergeStrategy parse_merge(std::string_view name) {
    return parse_named(name, kMerges, "merge strategy");
}
SelectionMode parse_selection_mode(std::string_view name) {
    return parse_named(name, kModes, "selection mode");
}

void CompressionConfig::validate() const {
    auto fail = [](const std::string& msg) {
        throw std::invalid_argument(msg);
    };
    if (!(alpha1 >= 0.0 && alpha1 <= 1.0)) {
        fail("alpha1 must lie in [0, 1], got " + std::to_string(alpha1));
    }
    if (!(alpha2 >= 0.0 && alpha2 <= 1.0)) {
        fail("alpha2 must lie in [0, 1], got " + std::to_string(alpha2));
    }
    // Small slack so that e.g. 0.7 + 0.3 is not rejected on rounding.
    if (alpha1 + alpha2 > 1.0 + 1e-12) {
        fail("alpha1 + alpha2 must not exceed 1, got " + std::to_string(alpha1 + alpha2));
    }
    if (policy != Policy::FullCache && alpha1 <= 0.0 && alpha2 <= 0.0) {
        fail("alpha1 or alpha2 must be positive for policy " + std::string(to_string(policy)));
    }
    if (merge != MergeStrategy::None && policy != Policy::LookM) {
        fail("merge strategy " + std::string(to_string(merge)) + " requires policy lookm, got " +
             std::string(to_string(policy)));
    }
    if (snapkv_kernel == 0 || snapkv_kernel % 2 == 0) {
        fail("snapkv_kernel must be an odd positive integer, got " + std::to_string(snapkv_kernel));
    }
}

BudgetPlan plan_budget(const CompressionConfig& config, std::size_t prompt_len) {
    if (prompt_len == 0) {
        throw std::invalid_argument("plan_budget: prompt length must be at least 1");
    }
    // The epsilon absorbs representation error such as 0.07 * 100 = 7.000000000000001
    // or 0.29 * 100 = 28.999999999999996.
    auto count = [prompt_len](double ratio) {
        const double raw = std::floor(ratio * static_cast<double>(prompt_len) + 1e-9);
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::max(0.0, raw)));
    };
    BudgetPlan plan;
    plan.m_recent = std::min(count(config.alpha1), prompt_len);
    const std::size_t n = count(config.alpha2);
    plan.n_important = std::min(n, prompt_len - plan.m_recent);
    plan.clamped = plan.n_important != n;
    plan.s_total = plan.m_recent + plan.n_important;
    return plan;
}

double Rng::uniform() {
    return static_cast<double>(m_engine() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (m_has_spare) {
        m_has_spare = false;
        return m_spare;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    m_spare = radius * std::sin(angle);
    m_has_spare = true;
    return radius * std::cos(angle);
}

}  // namespace lookm
