// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

// lookm: batch front end for KV-cache compression experiments.
//
//   lookm run [experiment.yaml] [flags]
//   lookm sweep [experiment.yaml] --totals 0.05,0.1,0.2 [--recent-share 0.5] [flags]
//   lookm compare report.json... [--csv out.csv]

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lookm/experiment.hpp"

namespace {

struct SharedFlags {
    lookm::Overrides overrides;
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = 1;
    std::string file;
};

void add_shared_flags(CLI::App* cmd, SharedFlags& f) {
    auto& o = f.overrides;
    cmd->add_option("file", f.file, "Experiment file (YAML)");
    cmd->add_option("--seed", f.seeds, "Seed(s); each run derives its weight and embedding seeds from it")
        ->delimiter(',');
    cmd->add_option("--jobs", f.jobs, "Runs executed concurrently")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "Output directory (default: $LOOKM_OUT_DIR or ./lookm_out)");
    cmd->add_option("--policy", o.policy, "full | lookm | h2o | snapkv | roco");
    cmd->add_option("--merge", o.merge, "none | averaged | pivotal | weighted");
    cmd->add_option("--alpha1", o.alpha1, "Recent-window ratio");
    cmd->add_option("--alpha2", o.alpha2, "Important-token ratio");
    cmd->add_option("--decode-steps", o.decode_steps, "Tokens decoded after prefill");
    cmd->add_option("--layers", o.layers, "Model layers");
    cmd->add_option("--heads", o.heads, "Attention heads per layer");
    cmd->add_option("--d-model", o.d_model, "Model width");
}

std::optional<std::filesystem::path> file_arg(const SharedFlags& f) {
    if (f.file.empty()) {
        return std::nullopt;
    }
    return std::filesystem::path(f.file);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"KV-cache compression experiments for multimodal prompts"};
    app.require_subcommand(1);

    SharedFlags run_flags;
    bool timing = false;
    auto* run = app.add_subcommand("run", "Run every cell x seed of an experiment");
    add_shared_flags(run, run_flags);
    run->add_flag("--timing", timing, "Record wall-clock decode time in the JSON reports");

    SharedFlags sweep_flags;
    std::vector<double> totals;
    double recent_share = 0.5;
    auto* sweep = app.add_subcommand("sweep", "Run one policy over a grid of total budgets");
    add_shared_flags(sweep, sweep_flags);
    sweep->add_option("--totals", totals, "Total budgets alpha1 + alpha2")->delimiter(',')->required();
    sweep->add_option("--recent-share", recent_share, "Fraction of each total given to the recent window");

    std::vector<std::string> reports;
    std::string csv_out;
    auto* compare = app.add_subcommand("compare", "Aggregate report JSONs into a comparison table");
    compare->add_option("reports", reports, "Report JSON files")->required();
    compare->add_option("--csv", csv_out, "Also write the table as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : lookm::kExitParse;
    }

    if (*run) {
        if (!run_flags.seeds.empty()) {
            run_flags.overrides.seeds = run_flags.seeds;
        }
        return lookm::cmd_run(file_arg(run_flags), run_flags.overrides, run_flags.jobs, timing, std::cout, std::cerr);
    }
    if (*sweep) {
        if (!sweep_flags.seeds.empty()) {
            sweep_flags.overrides.seeds = sweep_flags.seeds;
        }
        return lookm::cmd_sweep(file_arg(sweep_flags), sweep_flags.overrides, totals, recent_share, sweep_flags.jobs,
                                std::cout, std::cerr);
    }
    std::vector<std::filesystem::path> paths(reports.begin(), reports.end());
    std::optional<std::filesystem::path> csv;
    if (!csv_out.empty()) {
        csv = csv_out;
    }
    return lookm::cmd_compare(paths, csv, std::cout, std::cerr);
}
