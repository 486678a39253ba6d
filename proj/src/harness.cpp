// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace lookm {

std::size_t WorkloadSpec::prompt_len() const {
    std::size_t total = 0;
    for (const auto& s : segments) {
        total += s.length;
    }
    return total;
}

void WorkloadSpec::validate() const {
    if (segments.empty()) {
        throw std::invalid_argument("workload: no segments");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (segments[i].length == 0) {
            throw std::invalid_argument("workload: segment " + std::to_string(i) + " has zero length");
        }
        if (!(segments[i].spread >= 0.0)) {
            throw std::invalid_argument("workload: segment " + std::to_string(i) + " has negative spread");
        }
    }
    if (prompt_len() < 2) {
        throw std::invalid_argument("workload: prompt must contain at least 2 tokens");
    }
    if (decode_steps == 0) {
        throw std::invalid_argument("workload: decode_steps must be at least 1");
    }
    if (!(scale > 0.0)) {
        throw std::invalid_argument("workload: scale must be positive");
    }
}

Workload generate_workload(const WorkloadSpec& spec, std::size_t d_model) {
    spec.validate();
    Rng rng = make_rng(spec.embedding_seed);
    std::map<int, std::vector<double>> centres;
    auto fresh_centre = [&] {
        std::vector<double> c(d_model);
        for (auto& x : c) {
            x = rng.normal();
        }
        return c;
    };

    Workload out{Matrix(spec.prompt_len(), d_model), PromptLayout(std::vector<TokenKind>(spec.prompt_len()))};
    std::vector<TokenKind> kinds;
    kinds.reserve(spec.prompt_len());
    std::size_t row = 0;
    for (const Segment& seg : spec.segments) {
        std::vector<double> centre;
        if (seg.kind == TokenKind::Image) {
            if (seg.cluster < 0) {
                centre = fresh_centre();
            } else {
                auto it = centres.find(seg.cluster);
                if (it == centres.end()) {
                    it = centres.emplace(seg.cluster, fresh_centre()).first;
                }
                centre = it->second;
            }
        }
        for (std::size_t i = 0; i < seg.length; ++i, ++row) {
            auto r = out.embeddings.row(row);
            for (std::size_t d = 0; d < d_model; ++d) {
                const double x = seg.kind == TokenKind::Text ? rng.normal() : centre[d] + seg.spread * rng.normal();
                r[d] = spec.scale * x;
            }
            kinds.push_back(seg.kind);
        }
    }
    out.layout = PromptLayout(std::move(kinds));
    return out;
}

namespace {

WorkloadSpec image_clusters(double spread) {
    using enum TokenKind;
    WorkloadSpec w;
    w.segments = {
        {Text, 6, 0.0, -1},    {Image, 24, spread, 0}, {Text, 6, 0.0, -1}, {Image, 24, spread, 1},
        {Text, 4, 0.0, -1},    {Image, 24, spread, 0}, {Text, 12, 0.0, -1},
    };
    w.decode_steps = 10;
    return w;
}

}  // namespace

WorkloadSpec bundled_workload(std::string_view name) {
    using enum TokenKind;
    if (name == "clustered_image") {
        return image_clusters(0.3);
    }
    if (name == "redundant_image") {
        return image_clusters(0.0);
    }
    if (name == "text_heavy") {
        WorkloadSpec w;
        w.segments = {{Text, 30, 0.0, -1}, {Image, 10, 0.3, 0}, {Text, 30, 0.0, -1}, {Image, 10, 0.3, 1},
                      {Text, 20, 0.0, -1}};
        w.decode_steps = 10;
        return w;
    }
    if (name == "interleaved") {
        WorkloadSpec w;
        for (int i = 0; i < 5; ++i) {
            w.segments.push_back({Text, 5, 0.0, -1});
            w.segments.push_back({Image, 15, 0.5, i});
        }
        w.decode_steps = 10;
        return w;
    }
    throw std::invalid_argument("unknown bundled workload '" + std::string(name) + "'");
}

std::vector<std::string> bundled_workload_names() {
    return {"clustered_image", "redundant_image", "text_heavy", "interleaved"};
}

std::vector<ModalityMass> attention_heatmap(const AttentionRecord& record, const PromptLayout& layout) {
    if (record.prompt_len() != layout.size()) {
        throw std::invalid_argument("attention_heatmap: record and layout lengths differ");
    }
    const std::size_t len = layout.size();
    std::vector<ModalityMass> out(record.n_layers());
    for (std::size_t l = 0; l < record.n_layers(); ++l) {
        double text = 0.0;
        double image = 0.0;
        for (std::size_t h = 0; h < record.n_heads(); ++h) {
            const Matrix& p = record.lane(l, h);
            for (std::size_t i = 0; i < len; ++i) {
                for (std::size_t j = 0; j <= i; ++j) {
                    (layout.is_text(j) ? text : image) += p(i, j);
                }
            }
        }
        const double rows = static_cast<double>(record.n_heads() * len);
        out[l] = {text / rows, image / rows};
    }
    return out;
}

double RunReport::memory_ratio() const {
    return memory_entries_full == 0 ? 0.0
                                    : static_cast<double>(memory_entries_compressed) /
                                          static_cast<double>(memory_entries_full);
}

double RunReport::flop_ratio() const {
    return flop_proxy_full == 0 ? 0.0
                                : static_cast<double>(flop_proxy_compressed) / static_cast<double>(flop_proxy_full);
}

double RunReport::mean_divergence() const {
    if (divergence.empty()) {
        return 0.0;
    }
    return std::accumulate(divergence.begin(), divergence.end(), 0.0) / static_cast<double>(divergence.size());
}

double RunReport::max_divergence() const {
    return divergence.empty() ? 0.0 : *std::max_element(divergence.begin(), divergence.end());
}

std::string policy_id(const CompressionConfig& config) {
    switch (config.policy) {
        case Policy::FullCache:
            return "full";
        case Policy::LookM: {
            std::string id = config.text_prior ? "lookm" : "lookm-notp";
            if (config.selection_mode == SelectionMode::UnionTextTopN) {
                id += "-union";
            }
            if (config.merge != MergeStrategy::None) {
                id += "+" + std::string(to_string(config.merge));
            }
            return id;
        }
        case Policy::H2O:
            return "h2o";
        case Policy::SnapKV:
            return "snapkv-lite";
        case Policy::RoCo:
            return "roco-lite";
    }
    return "?";
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine_distance: length mismatch");
    }
    if (std::equal(a.begin(), a.end(), b.begin())) {
        return 0.0;
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 1.0;
    }
    return std::clamp(1.0 - dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 2.0);
}

RunReport run_pair(const ModelSpec& model_spec, const WorkloadSpec& workload_spec, const CompressionConfig& config,
                   const RunOptions& options) {
    config.validate();
    const Model model(model_spec);
    const Workload workload = generate_workload(workload_spec, model_spec.d_model);
    const std::size_t len = workload.layout.size();
    const std::size_t steps = workload_spec.decode_steps;

    PrefillResult pre = prefill(model, workload.embeddings, workload.layout, options.exec);
    CompressedCache compressed = compress_cache(pre.cache, pre.record, workload.layout, config, options.exec);

    RunReport report;
    report.policy_id = policy_id(config);
    report.config = config;
    report.model = model_spec;
    report.prompt_len = len;
    report.decode_steps = steps;
    report.embedding_seed = workload_spec.embedding_seed;
    report.bytes_per_scalar = options.bytes_per_scalar;
    report.free_running = options.free_running;
    report.plan = compressed.stats.plan;
    report.lane_sizes = compressed.stats.lane_sizes;
    report.memory_entries_full = pre.cache.total_entries();
    report.memory_entries_compressed = compressed.cache.total_entries();
    const std::size_t entry_bytes = 2 * model_spec.head_dim() * options.bytes_per_scalar;
    report.memory_bytes_full = report.memory_entries_full * entry_bytes;
    report.memory_bytes_compressed = report.memory_entries_compressed * entry_bytes;
    report.negative_weight_fraction = compressed.stats.negative_weight_fraction();
    report.zero_norm_pairs = compressed.stats.zero_norm_pairs;
    report.attention_summary = attention_heatmap(pre.record, workload.layout);

    KvCache& full = pre.cache;
    KvCache& small = compressed.cache;
    const auto last = pre.hidden.row(len - 1);
    std::vector<double> input(last.begin(), last.end());
    std::vector<double> input_small = input;
    double full_ms = 0.0;
    double small_ms = 0.0;
    using clock = std::chrono::steady_clock;
    for (std::size_t t = 0; t < steps; ++t) {
        auto t0 = clock::now();
        std::vector<double> out_full = decode_step(model, full, input, options.exec);
        auto t1 = clock::now();
        std::vector<double> out_small =
            decode_step(model, small, options.free_running ? input_small : input, options.exec);
        auto t2 = clock::now();
        full_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
        small_ms += std::chrono::duration<double, std::milli>(t2 - t1).count();

        for (std::size_t f = 0; f < full.n_lanes(); ++f) {
            report.flop_proxy_full += full.lane(f).size();
            report.flop_proxy_compressed += small.lane(f).size();
        }
        report.divergence.push_back(cosine_distance(out_full, out_small));
        input = std::move(out_full);
        input_small = std::move(out_small);
    }
    if (options.timing) {
        report.wall_clock_ms = std::make_pair(full_ms, small_ms);
    }
    return report;
}

std::vector<RunReport> sweep(const ModelSpec& model, const WorkloadSpec& workload, const CompressionConfig& base,
                             const std::vector<std::pair<double, double>>& budgets, const RunOptions& options) {
    if (budgets.empty()) {
        throw std::invalid_argument("sweep: no budgets given");
    }
    std::vector<RunReport> out;
    out.reserve(budgets.size());
    for (const auto& [a1, a2] : budgets) {
        CompressionConfig config = base;
        config.alpha1 = a1;
        config.alpha2 = a2;
        out.push_back(run_pair(model, workload, config, options));
    }
    return out;
}

std::string report_to_json(const RunReport& r, std::string_view timestamp) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["timestamp"] = std::string(timestamp);
    j["policy_id"] = r.policy_id;
    j["config"] = {
        {"policy", to_string(r.config.policy)},
        {"merge", to_string(r.config.merge)},
        {"alpha1", r.config.alpha1},
        {"alpha2", r.config.alpha2},
        {"text_prior", r.config.text_prior},
        {"selection_mode", to_string(r.config.selection_mode)},
        {"tie_break", "lower_index"},
        {"snapkv_kernel", r.config.snapkv_kernel},
        {"seed", r.config.seed},
    };
    j["model"] = {
        {"layers", r.model.n_layers}, {"heads", r.model.n_heads},           {"d_model", r.model.d_model},
        {"head_dim", r.model.head_dim()}, {"weight_seed", r.model.weight_seed}, {"positional", r.model.positional},
    };
    j["workload"] = {
        {"prompt_len", r.prompt_len},
        {"decode_steps", r.decode_steps},
        {"embedding_seed", r.embedding_seed},
    };
    j["budget"] = {{"m_recent", r.plan.m_recent}, {"n_important", r.plan.n_important}, {"s_total", r.plan.s_total}};
    j["lane_sizes"] = r.lane_sizes;
    j["memory"] = {
        {"entries_full", r.memory_entries_full},
        {"entries_compressed", r.memory_entries_compressed},
        {"bytes_per_scalar", r.bytes_per_scalar},
        {"bytes_full", r.memory_bytes_full},
        {"bytes_compressed", r.memory_bytes_compressed},
        {"ratio", r.memory_ratio()},
    };
    j["flop_proxy"] = {
        {"full", r.flop_proxy_full},
        {"compressed", r.flop_proxy_compressed},
        {"ratio", r.flop_ratio()},
    };
    j["divergence"] = {
        {"mode", r.free_running ? "free_running" : "teacher_forced"},
        {"per_step", r.divergence},
        {"mean", r.mean_divergence()},
        {"max", r.max_divergence()},
    };
    j["merge_stats"] = {
        {"negative_weight_fraction", r.negative_weight_fraction},
        {"zero_norm_pairs", r.zero_norm_pairs},
    };
    ordered_json summary = ordered_json::array();
    for (std::size_t l = 0; l < r.attention_summary.size(); ++l) {
        summary.push_back({{"layer", l},
                           {"text_mass", r.attention_summary[l].text},
                           {"image_mass", r.attention_summary[l].image}});
    }
    j["attention_summary"] = std::move(summary);
    if (r.wall_clock_ms) {
        j["wall_clock_ms"] = {{"full", r.wall_clock_ms->first}, {"compressed", r.wall_clock_ms->second}};
    }
    return j.dump(2) + "\n";
}

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

std::string csv_header() {
    return "experiment,cell,policy_id,policy,merge,alpha1,alpha2,text_prior,selection_mode,seed,prompt_len,"
           "decode_steps,m_recent,n_important,s_total,memory_entries_full,memory_entries_compressed,"
           "memory_bytes_full,memory_bytes_compressed,memory_ratio,flop_proxy_full,flop_proxy_compressed,"
           "flop_ratio,mean_divergence,max_divergence,negative_weight_fraction";
}

std::string csv_row(const RunReport& r, std::string_view experiment, std::size_t cell) {
    std::string row;
    auto add = [&row](const std::string& field) {
        if (!row.empty()) {
            row += ',';
        }
        row += field;
    };
    add(std::string(experiment));
    add(std::to_string(cell));
    add(r.policy_id);
    add(std::string(to_string(r.config.policy)));
    add(std::string(to_string(r.config.merge)));
    add(fmt("%.6g", r.config.alpha1));
    add(fmt("%.6g", r.config.alpha2));
    add(r.config.text_prior ? "1" : "0");
    add(std::string(to_string(r.config.selection_mode)));
    add(std::to_string(r.config.seed));
    add(std::to_string(r.prompt_len));
    add(std::to_string(r.decode_steps));
    add(std::to_string(r.plan.m_recent));
    add(std::to_string(r.plan.n_important));
    add(std::to_string(r.plan.s_total));
    add(std::to_string(r.memory_entries_full));
    add(std::to_string(r.memory_entries_compressed));
    add(std::to_string(r.memory_bytes_full));
    add(std::to_string(r.memory_bytes_compressed));
    add(fmt("%.6f", r.memory_ratio()));
    add(std::to_string(r.flop_proxy_full));
    add(std::to_string(r.flop_proxy_compressed));
    add(fmt("%.6f", r.flop_ratio()));
    add(fmt("%.6e", r.mean_divergence()));
    add(fmt("%.6e", r.max_divergence()));
    add(fmt("%.6f", r.negative_weight_fraction));
    return row;
}

}  // namespace lookm
