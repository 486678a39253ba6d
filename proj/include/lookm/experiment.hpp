// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lookm/attention.hpp"
#include "lookm/core.hpp"
#include "lookm/harness.hpp"

namespace lookm {

inline constexpr int kExperimentSchemaVersion = 1;

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitParse = 2,
    kExitInfeasible = 3,
    kExitIo = 4,
};

/// Malformed or invalid experiment file, report, or flag value.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentFile {
    int schema_version = kExperimentSchemaVersion;
    std::string name = "experiment";
    ModelSpec model;
    WorkloadSpec workload;
    std::vector<CompressionConfig> cells;
    std::vector<std::uint64_t> seeds{0};
    std::optional<std::string> output_dir;
    std::size_t bytes_per_scalar = 2;
    bool free_running = false;
    /// Dotted keys present in the source document ("model.layers", "workload.decode_steps", ...).
    std::set<std::string> present;
};

/// Parses and fully validates an experiment document. Throws ParseError naming the
/// offending key or cell.
ExperimentFile parse_experiment(const std::string& text);
ExperimentFile load_experiment(const std::filesystem::path& path);

/// Values given on the command line. Unset fields leave the experiment untouched.
struct Overrides {
    std::optional<std::string> policy;
    std::optional<std::string> merge;
    std::optional<double> alpha1;
    std::optional<double> alpha2;
    std::optional<std::size_t> decode_steps;
    std::optional<std::size_t> layers;
    std::optional<std::size_t> heads;
    std::optional<std::size_t> d_model;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<std::string> out;
};

/**
 * Folds command-line values into an experiment. A value the file already sets keeps the
 * file's value and a warning is written to `warn`.
 */
void apply_overrides(ExperimentFile& exp, const Overrides& overrides, std::ostream& warn);

/// Experiment used when `run` gets no file: one LOOK-M cell on the clustered-image workload.
ExperimentFile default_experiment();

/// Output directory: file or --out value, else $LOOKM_OUT_DIR, else "lookm_out".
std::filesystem::path resolve_output_dir(const ExperimentFile& exp);

/// The effective model/workload/config of one (cell, seed) run.
struct RunPlan {
    std::size_t cell = 0;
    std::uint64_t seed = 0;
    ModelSpec model;
    WorkloadSpec workload;
    CompressionConfig config;
};
std::vector<RunPlan> expand_runs(const ExperimentFile& exp);

struct RunSummary {
    std::vector<RunReport> reports;
    std::vector<std::filesystem::path> json_files;
    std::filesystem::path csv_file;
};

/**
 * Runs every cell x seed (up to `jobs` at a time), then writes one JSON per run and an
 * aggregate CSV named after the experiment. Throws InfeasibleBudget before any run starts
 * if a cell's budget cannot fit the prompt, and IoError on write failures.
 */
RunSummary execute_experiment(const ExperimentFile& exp, std::size_t jobs, bool timing = false);

/// A row of the comparison table: reports grouped by (policy, merge, alpha1, alpha2).
struct CompareRow {
    std::string policy;
    std::string merge;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    std::size_t seeds = 0;
    double mean_divergence = 0.0;
    double memory_ratio = 0.0;
    double flop_ratio = 0.0;
};

/// Reads report JSON documents; throws ParseError on schema mismatch.
std::vector<CompareRow> compare_reports(const std::vector<std::filesystem::path>& reports);
std::string compare_csv(const std::vector<CompareRow>& rows);
std::string compare_table(const std::vector<CompareRow>& rows);

/// Command entry points; return an ExitCode and print diagnostics to `err`.
int cmd_run(const std::optional<std::filesystem::path>& file, const Overrides& overrides, std::size_t jobs,
            bool timing, std::ostream& out, std::ostream& err);
int cmd_compare(const std::vector<std::filesystem::path>& reports, const std::optional<std::filesystem::path>& csv_out,
                std::ostream& out, std::ostream& err);
/// Builds one cell per total budget, split `recent_share` : (1 - recent_share) into alpha1 : alpha2.
int cmd_sweep(const std::optional<std::filesystem::path>& file, const Overrides& overrides,
              const std::vector<double>& totals, double recent_share, std::size_t jobs, std::ostream& out,
              std::ostream& err);

}  // namespace lookm
