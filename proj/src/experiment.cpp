// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookm/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace lookm {

namespace fs = std::filesystem;

namespace {

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) {
        throw ParseError(where + ": expected a mapping");
    }
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ParseError(where + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& where) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ParseError(where + ": invalid value '" + YAML::Dump(node) + "'");
    }
}

// Counts must be non-negative integers; yaml-cpp happily wraps -1 into a size_t.
std::size_t count(const YAML::Node& node, const std::string& where) {
    const auto v = scalar<long long>(node, where);
    if (v < 0) {
        throw ParseError(where + ": must be non-negative, got " + std::to_string(v));
    }
    return static_cast<std::size_t>(v);
}

std::uint64_t seed_value(const YAML::Node& node, const std::string& where) {
    return static_cast<std::uint64_t>(count(node, where));
}

void parse_model(const YAML::Node& node, ExperimentFile& exp) {
    check_keys(node, "model", {"layers", "heads", "d_model", "weight_seed", "positional"});
    auto set = [&](const char* key, auto&& fn) {
        if (node[key]) {
            fn(node[key], std::string("model.") + key);
            exp.present.insert(std::string("model.") + key);
        }
    };
    set("layers", [&](const YAML::Node& n, const std::string& w) { exp.model.n_layers = count(n, w); });
    set("heads", [&](const YAML::Node& n, const std::string& w) { exp.model.n_heads = count(n, w); });
    set("d_model", [&](const YAML::Node& n, const std::string& w) { exp.model.d_model = count(n, w); });
    set("weight_seed", [&](const YAML::Node& n, const std::string& w) { exp.model.weight_seed = seed_value(n, w); });
    set("positional", [&](const YAML::Node& n, const std::string& w) { exp.model.positional = scalar<bool>(n, w); });
}

Segment parse_segment(const YAML::Node& node, const std::string& where) {
    check_keys(node, where, {"kind", "length", "spread", "cluster"});
    if (!node["kind"] || !node["length"]) {
        throw ParseError(where + ": 'kind' and 'length' are required");
    }
    Segment seg;
    const auto kind = scalar<std::string>(node["kind"], where + ".kind");
    if (kind == "text") {
        seg.kind = TokenKind::Text;
    } else if (kind == "image") {
        seg.kind = TokenKind::Image;
    } else {
        throw ParseError(where + ".kind: expected 'text' or 'image', got '" + kind + "'");
    }
    seg.length = count(node["length"], where + ".length");
    if (node["spread"]) {
        seg.spread = scalar<double>(node["spread"], where + ".spread");
    }
    if (node["cluster"]) {
        seg.cluster = scalar<int>(node["cluster"], where + ".cluster");
    }
    return seg;
}

void parse_workload(const YAML::Node& node, ExperimentFile& exp) {
    check_keys(node, "workload", {"bundled", "segments", "decode_steps", "embedding_seed", "scale"});
    if (node["bundled"] && node["segments"]) {
        throw ParseError("workload: give either 'bundled' or 'segments', not both");
    }
    if (node["bundled"]) {
        const auto name = scalar<std::string>(node["bundled"], "workload.bundled");
        try {
            exp.workload = bundled_workload(name);
        } catch (const std::invalid_argument& e) {
            throw ParseError(std::string("workload.bundled: ") + e.what());
        }
        exp.present.insert("workload.segments");
    }
    if (node["segments"]) {
        if (!node["segments"].IsSequence()) {
            throw ParseError("workload.segments: expected a list");
        }
        exp.workload.segments.clear();
        for (std::size_t i = 0; i < node["segments"].size(); ++i) {
            exp.workload.segments.push_back(
                parse_segment(node["segments"][i], "workload.segments[" + std::to_string(i) + "]"));
        }
        exp.present.insert("workload.segments");
    }
    if (node["decode_steps"]) {
        exp.workload.decode_steps = count(node["decode_steps"], "workload.decode_steps");
        exp.present.insert("workload.decode_steps");
    }
    if (node["embedding_seed"]) {
        exp.workload.embedding_seed = seed_value(node["embedding_seed"], "workload.embedding_seed");
    }
    if (node["scale"]) {
        exp.workload.scale = scalar<double>(node["scale"], "workload.scale");
    }
}

std::string describe_cell(std::size_t index, const YAML::Node& node) {
    std::string text = "cell " + std::to_string(index);
    if (node.IsMap() && node["policy"] && node["policy"].IsScalar()) {
        text += " (" + node["policy"].as<std::string>() + ")";
    }
    return text;
}

CompressionConfig parse_cell(const YAML::Node& node, std::size_t index) {
    const std::string where = describe_cell(index, node);
    check_keys(node, where,
               {"policy", "merge", "alpha1", "alpha2", "text_prior", "selection_mode", "snapkv_kernel"});
    if (!node["policy"]) {
        throw ParseError(where + ": 'policy' is required");
    }
    CompressionConfig c;
    try {
        c.policy = parse_policy(scalar<std::string>(node["policy"], where + ".policy"));
        c.merge = c.policy == Policy::LookM ? MergeStrategy::Pivotal : MergeStrategy::None;
        c.text_prior = c.policy == Policy::LookM;
        if (node["merge"]) {
            c.merge = parse_merge(scalar<std::string>(node["merge"], where + ".merge"));
        }
        if (node["alpha1"]) {
            c.alpha1 = scalar<double>(node["alpha1"], where + ".alpha1");
        }
        if (node["alpha2"]) {
            c.alpha2 = scalar<double>(node["alpha2"], where + ".alpha2");
        }
        if (node["text_prior"]) {
            c.text_prior = scalar<bool>(node["text_prior"], where + ".text_prior");
        }
        if (node["selection_mode"]) {
            c.selection_mode = parse_selection_mode(scalar<std::string>(node["selection_mode"], where + ".selection_mode"));
        }
        if (node["snapkv_kernel"]) {
            c.snapkv_kernel = count(node["snapkv_kernel"], where + ".snapkv_kernel");
        }
        if (c.text_prior && c.policy != Policy::LookM) {
            throw std::invalid_argument("text_prior requires policy lookm");
        }
        if (c.selection_mode != SelectionMode::TopNOnly && c.policy != Policy::LookM) {
            throw std::invalid_argument("selection_mode union requires policy lookm");
        }
        c.validate();
    } catch (const ParseError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ParseError(where + ": " + e.what());
    }
    return c;
}

void validate_experiment(const ExperimentFile& exp) {
    if (exp.schema_version != kExperimentSchemaVersion) {
        throw ParseError("schema_version " + std::to_string(exp.schema_version) + " is not supported (expected " +
                         std::to_string(kExperimentSchemaVersion) + ")");
    }
    if (exp.cells.empty()) {
        throw ParseError("cells: at least one cell is required");
    }
    if (exp.seeds.empty()) {
        throw ParseError("seeds: at least one seed is required");
    }
    if (exp.bytes_per_scalar == 0) {
        throw ParseError("bytes_per_scalar must be positive");
    }
    try {
        exp.model.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
    try {
        exp.workload.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("workload: ") + e.what());
    }
    for (std::size_t i = 0; i < exp.cells.size(); ++i) {
        try {
            exp.cells[i].validate();
        } catch (const std::invalid_argument& e) {
            throw ParseError("cell " + std::to_string(i) + " (" + std::string(to_string(exp.cells[i].policy)) +
                             "): " + e.what());
        }
    }
}

}  // namespace

ExperimentFile parse_experiment(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
    check_keys(root, "experiment",
               {"schema_version", "name", "model", "workload", "cells", "seeds", "output", "bytes_per_scalar",
                "free_running"});
    if (!root["schema_version"]) {
        throw ParseError("schema_version: required header field is missing");
    }
    ExperimentFile exp;
    exp.schema_version = scalar<int>(root["schema_version"], "schema_version");
    if (root["name"]) {
        exp.name = scalar<std::string>(root["name"], "name");
        if (exp.name.empty() || exp.name.find_first_of("/\\") != std::string::npos) {
            throw ParseError("name: must be non-empty and contain no path separators");
        }
    }
    if (root["model"]) {
        parse_model(root["model"], exp);
    }
    if (root["workload"]) {
        parse_workload(root["workload"], exp);
    } else {
        exp.workload = bundled_workload("clustered_image");
    }
    if (!root["cells"] || !root["cells"].IsSequence()) {
        throw ParseError("cells: expected a list of cells");
    }
    for (std::size_t i = 0; i < root["cells"].size(); ++i) {
        exp.cells.push_back(parse_cell(root["cells"][i], i));
    }
    exp.present.insert("cells");
    if (root["seeds"]) {
        if (!root["seeds"].IsSequence()) {
            throw ParseError("seeds: expected a list");
        }
        exp.seeds.clear();
        for (std::size_t i = 0; i < root["seeds"].size(); ++i) {
            exp.seeds.push_back(seed_value(root["seeds"][i], "seeds[" + std::to_string(i) + "]"));
        }
        exp.present.insert("seeds");
    }
    if (root["output"]) {
        exp.output_dir = scalar<std::string>(root["output"], "output");
        exp.present.insert("output");
    }
    if (root["bytes_per_scalar"]) {
        exp.bytes_per_scalar = count(root["bytes_per_scalar"], "bytes_per_scalar");
    }
    if (root["free_running"]) {
        exp.free_running = scalar<bool>(root["free_running"], "free_running");
    }
    validate_experiment(exp);
    return exp;
}

ExperimentFile load_experiment(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open experiment file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment(buf.str());
}

ExperimentFile default_experiment() {
    ExperimentFile exp;
    exp.name = "run";
    exp.workload = bundled_workload("clustered_image");
    exp.cells.push_back(CompressionConfig{});
    return exp;
}

void apply_overrides(ExperimentFile& exp, const Overrides& o, std::ostream& warn) {
    auto take = [&](const char* key, const char* flag, bool given, auto&& assign) {
        if (!given) {
            return;
        }
        if (exp.present.contains(key)) {
            warn << "warning: " << flag << " ignored; the experiment file sets " << key << "\n";
            return;
        }
        assign();
    };
    take("model.layers", "--layers", o.layers.has_value(), [&] { exp.model.n_layers = *o.layers; });
    take("model.heads", "--heads", o.heads.has_value(), [&] { exp.model.n_heads = *o.heads; });
    take("model.d_model", "--d-model", o.d_model.has_value(), [&] { exp.model.d_model = *o.d_model; });
    take("workload.decode_steps", "--decode-steps", o.decode_steps.has_value(),
         [&] { exp.workload.decode_steps = *o.decode_steps; });
    take("seeds", "--seed", o.seeds.has_value(), [&] { exp.seeds = *o.seeds; });
    take("output", "--out", o.out.has_value(), [&] { exp.output_dir = *o.out; });

    const bool cell_flags = o.policy || o.merge || o.alpha1 || o.alpha2;
    if (cell_flags && exp.present.contains("cells")) {
        warn << "warning: --policy/--merge/--alpha1/--alpha2 ignored; the experiment file defines its cells\n";
    } else if (cell_flags) {
        CompressionConfig& c = exp.cells.at(0);
        try {
            if (o.policy) {
                c.policy = parse_policy(*o.policy);
                c.merge = c.policy == Policy::LookM ? MergeStrategy::Pivotal : MergeStrategy::None;
                c.text_prior = c.policy == Policy::LookM;
            }
            if (o.merge) {
                c.merge = parse_merge(*o.merge);
            }
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what());
        }
        if (o.alpha1) {
            c.alpha1 = *o.alpha1;
        }
        if (o.alpha2) {
            c.alpha2 = *o.alpha2;
        }
    }
    validate_experiment(exp);
}

fs::path resolve_output_dir(const ExperimentFile& exp) {
    if (exp.output_dir) {
        return *exp.output_dir;
    }
    if (const char* env = std::getenv("LOOKM_OUT_DIR"); env && *env) {
        return env;
    }
    return "lookm_out";
}

std::vector<RunPlan> expand_runs(const ExperimentFile& exp) {
    std::vector<RunPlan> runs;
    for (std::size_t c = 0; c < exp.cells.size(); ++c) {
        for (std::uint64_t seed : exp.seeds) {
            RunPlan r{c, seed, exp.model, exp.workload, exp.cells[c]};
            r.model.weight_seed = exp.model.weight_seed + seed;
            r.workload.embedding_seed = exp.workload.embedding_seed + seed;
            r.config.seed = seed;
            runs.push_back(std::move(r));
        }
    }
    return runs;
}

namespace {

std::string iso8601_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace

RunSummary execute_experiment(const ExperimentFile& exp, std::size_t jobs, bool timing) {
    const std::size_t len = exp.workload.prompt_len();
    for (std::size_t c = 0; c < exp.cells.size(); ++c) {
        const CompressionConfig& cfg = exp.cells[c];
        if (cfg.policy != Policy::FullCache && plan_budget(cfg, len).clamped) {
            throw InfeasibleBudget("cell " + std::to_string(c) + " (" + policy_id(cfg) + "): alpha1=" +
                                   std::to_string(cfg.alpha1) + " leaves no room for an important token in a " +
                                   std::to_string(len) + "-token prompt");
        }
    }

    const fs::path dir = resolve_output_dir(exp);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    }

    const std::vector<RunPlan> runs = expand_runs(exp);
    std::vector<RunReport> reports(runs.size());
    std::vector<std::exception_ptr> errors(runs.size());
    RunOptions options;
    options.bytes_per_scalar = exp.bytes_per_scalar;
    options.free_running = exp.free_running;
    options.timing = timing;

    const auto n = static_cast<std::ptrdiff_t>(runs.size());
    const int threads = static_cast<int>(std::max<std::size_t>(1, jobs));
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const RunPlan& r = runs[static_cast<std::size_t>(i)];
        try {
            reports[static_cast<std::size_t>(i)] = run_pair(r.model, r.workload, r.config, options);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (!errors[i]) {
            continue;
        }
        try {
            std::rethrow_exception(errors[i]);
        } catch (const InfeasibleBudget& e) {
            throw InfeasibleBudget("cell " + std::to_string(runs[i].cell) + ", seed " + std::to_string(runs[i].seed) +
                                   ": " + e.what());
        }
    }

    RunSummary summary;
    const std::string stamp = iso8601_now();
    std::string csv = csv_header() + "\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const fs::path file =
            dir / (exp.name + "_c" + std::to_string(runs[i].cell) + "_s" + std::to_string(runs[i].seed) + ".json");
        write_file(file, report_to_json(reports[i], stamp));
        summary.json_files.push_back(file);
        csv += csv_row(reports[i], exp.name, runs[i].cell) + "\n";
    }
    summary.csv_file = dir / (exp.name + ".csv");
    write_file(summary.csv_file, csv);
    summary.reports = std::move(reports);
    return summary;
}

std::vector<CompareRow> compare_reports(const std::vector<fs::path>& paths) {
    using nlohmann::json;
    struct Acc {
        std::size_t n = 0;
        double divergence = 0.0;
        double memory = 0.0;
        double flops = 0.0;
    };
    std::map<std::tuple<std::string, std::string, double, double>, Acc> groups;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) {
            throw IoError("cannot open report " + path.string());
        }
        json j;
        try {
            j = json::parse(in);
            const int version = j.at("schema_version").get<int>();
            if (version != kReportSchemaVersion) {
                throw ParseError(path.string() + ": report schema_version " + std::to_string(version) +
                                 " does not match " + std::to_string(kReportSchemaVersion));
            }
            const auto key = std::make_tuple(j.at("policy_id").get<std::string>(),
                                             j.at("config").at("merge").get<std::string>(),
                                             j.at("config").at("alpha1").get<double>(),
                                             j.at("config").at("alpha2").get<double>());
            Acc& acc = groups[key];
            ++acc.n;
            acc.divergence += j.at("divergence").at("mean").get<double>();
            acc.memory += j.at("memory").at("ratio").get<double>();
            acc.flops += j.at("flop_proxy").at("ratio").get<double>();
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ": not a valid report: " + e.what());
        }
    }
    std::vector<CompareRow> rows;
    for (const auto& [key, acc] : groups) {
        const double n = static_cast<double>(acc.n);
        rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), acc.n,
                        acc.divergence / n, acc.memory / n, acc.flops / n});
    }
    return rows;
}

namespace {

std::string num(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

std::string compare_csv(const std::vector<CompareRow>& rows) {
    std::string out = "policy,merge,alpha1,alpha2,seeds,mean_divergence,memory_ratio,flop_ratio\n";
    for (const auto& r : rows) {
        out += r.policy + "," + r.merge + "," + num("%.6g", r.alpha1) + "," + num("%.6g", r.alpha2) + "," +
               std::to_string(r.seeds) + "," + num("%.6e", r.mean_divergence) + "," + num("%.6f", r.memory_ratio) +
               "," + num("%.6f", r.flop_ratio) + "\n";
    }
    return out;
}

std::string compare_table(const std::vector<CompareRow>& rows) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-22s %-9s %8s %8s %5s %14s %9s %9s\n", "policy", "merge", "alpha1", "alpha2",
                  "seeds", "mean_div", "mem", "flops");
    out += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-22s %-9s %8.4g %8.4g %5zu %14.6e %9.4f %9.4f\n", r.policy.c_str(),
                      r.merge.c_str(), r.alpha1, r.alpha2, r.seeds, r.mean_divergence, r.memory_ratio, r.flop_ratio);
        out += line;
    }
    return out;
}

namespace {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const InfeasibleBudget& e) {
        err << "error: infeasible budget: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace

int cmd_run(const std::optional<fs::path>& file, const Overrides& overrides, std::size_t jobs, bool timing,
            std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        ExperimentFile exp = file ? load_experiment(*file) : default_experiment();
        apply_overrides(exp, overrides, err);
        const RunSummary summary = execute_experiment(exp, jobs, timing);
        out << "wrote " << summary.json_files.size() << " report(s) and " << summary.csv_file.string() << "\n";
        return static_cast<int>(kExitOk);
    });
}

int cmd_compare(const std::vector<fs::path>& reports, const std::optional<fs::path>& csv_out, std::ostream& out,
                std::ostream& err) {
    return guarded(err, [&] {
        if (reports.empty()) {
            throw ParseError("compare: no report files given");
        }
        const auto rows = compare_reports(reports);
        out << compare_table(rows);
        if (csv_out) {
            write_file(*csv_out, compare_csv(rows));
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_sweep(const std::optional<fs::path>& file, const Overrides& overrides, const std::vector<double>& totals,
              double recent_share, std::size_t jobs, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (totals.empty()) {
            throw ParseError("sweep: at least one total budget is required");
        }
        if (!(recent_share >= 0.0 && recent_share <= 1.0)) {
            throw ParseError("sweep: --recent-share must lie in [0, 1]");
        }
        ExperimentFile exp = file ? load_experiment(*file) : default_experiment();
        if (!file) {
            exp.name = "sweep";
        }
        // The sweep replaces the cells; the first cell (or the flags) supplies the policy.
        exp.present.erase("cells");
        exp.cells.resize(1);
        apply_overrides(exp, overrides, err);
        const CompressionConfig base = exp.cells.front();
        exp.cells.clear();
        for (double total : totals) {
            CompressionConfig c = base;
            c.alpha1 = total * recent_share;
            c.alpha2 = total - c.alpha1;
            exp.cells.push_back(c);
        }
        validate_experiment(exp);
        const RunSummary summary = execute_experiment(exp, jobs);
        out << "wrote " << summary.json_files.size() << " report(s) and " << summary.csv_file.string() << "\n";
        return static_cast<int>(kExitOk);
    });
}

}  // namespace lookm
