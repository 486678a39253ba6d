// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lookm/attention.hpp"
#include "lookm/compress.hpp"
#include "lookm/core.hpp"

namespace lookm {

/// Version of the JSON report layout and the CSV column set.
inline constexpr int kReportSchemaVersion = 1;

/**
 * @brief A run of same-modality tokens in a synthetic prompt.
 *
 * Image segments are drawn around a cluster centre; segments with the same non-negative
 * `cluster` id share one centre, which emulates redundant visual tokens. Text tokens are
 * i.i.d. standard normal and ignore spread/cluster.
 */
struct Segment {
    TokenKind kind = TokenKind::Text;
    std::size_t length = 0;
    double spread = 0.0;
    int cluster = -1;
};

struct WorkloadSpec {
    std::vector<Segment> segments;
    std::size_t decode_steps = 8;
    std::uint64_t embedding_seed = 0;
    /// Multiplies every generated embedding entry.
    double scale = 1.0;

    std::size_t prompt_len() const;
    void validate() const;
};

struct Workload {
    Matrix embeddings;
    PromptLayout layout;
};

Workload generate_workload(const WorkloadSpec& spec, std::size_t d_model);

/// Named synthetic workloads shipped with the library ("clustered_image", "redundant_image",
/// "text_heavy", "interleaved"). Throws std::invalid_argument for unknown names.
WorkloadSpec bundled_workload(std::string_view name);
std::vector<std::string> bundled_workload_names();

/// Mean attention mass landing on text vs image columns for one layer.
struct ModalityMass {
    double text = 0.0;
    double image = 0.0;
};

/// Per layer: mean over heads and query rows of the attention mass on text/image positions.
std::vector<ModalityMass> attention_heatmap(const AttentionRecord& record, const PromptLayout& layout);

struct RunOptions {
    std::size_t bytes_per_scalar = 2;
    /// When set, the compressed branch feeds back its own outputs instead of the full branch's.
    bool free_running = false;
    /// Record wall-clock time of each branch. Off by default since it breaks byte-identical reports.
    bool timing = false;
    Exec exec = Exec::Parallel;
};

struct RunReport {
    std::string policy_id;
    CompressionConfig config;
    ModelSpec model;
    std::size_t prompt_len = 0;
    std::size_t decode_steps = 0;
    std::uint64_t embedding_seed = 0;
    std::size_t bytes_per_scalar = 2;
    bool free_running = false;
    BudgetPlan plan;

    std::vector<std::size_t> lane_sizes;
    std::size_t memory_entries_full = 0;
    std::size_t memory_entries_compressed = 0;
    std::size_t memory_bytes_full = 0;
    std::size_t memory_bytes_compressed = 0;
    std::size_t flop_proxy_full = 0;
    std::size_t flop_proxy_compressed = 0;
    std::vector<double> divergence;
    double negative_weight_fraction = 0.0;
    std::size_t zero_norm_pairs = 0;
    std::vector<ModalityMass> attention_summary;
    std::optional<std::pair<double, double>> wall_clock_ms;  ///< (full, compressed), informational

    double memory_ratio() const;
    double flop_ratio() const;
    double mean_divergence() const;
    double max_divergence() const;
};

/// Short label such as "lookm+pivotal", "h2o" or "snapkv-lite".
std::string policy_id(const CompressionConfig& config);

/// 1 - cos(a, b) clamped to [0, 2]; exactly 0 for bit-identical vectors.
double cosine_distance(std::span<const double> a, std::span<const double> b);

/**
 * Prefills once, then decodes `decode_steps` tokens with the full cache and with a
 * compressed copy. Both branches get the same input each step (the full branch's previous
 * output) unless `free_running` is set.
 */
RunReport run_pair(const ModelSpec& model, const WorkloadSpec& workload, const CompressionConfig& config,
                   const RunOptions& options = {});

/// One run_pair per (alpha1, alpha2) budget, in the order given.
std::vector<RunReport> sweep(const ModelSpec& model, const WorkloadSpec& workload, const CompressionConfig& base,
                             const std::vector<std::pair<double, double>>& budgets, const RunOptions& options = {});

/// JSON document for one report. `timestamp` is the only field allowed to vary between runs.
std::string report_to_json(const RunReport& report, std::string_view timestamp);
std::string csv_header();
std::string csv_row(const RunReport& report, std::string_view experiment, std::size_t cell);

}  // namespace lookm
