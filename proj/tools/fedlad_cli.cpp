// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedlad/cli/commands.hpp"

namespace {

template <typename T>
std::optional<T> if_set(const CLI::Option* opt, const T& value) {
    return opt->count() > 0 ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace fedlad::cli;

    CLI::App app{"FedLAD workbench: poisoning-defence experiments and RREF tools"};
    app.set_version_flag("--version", FEDLAD_VERSION);
    app.require_subcommand(1);

    RunOptions run;
    std::size_t run_workers = 1;
    double run_epsilon = 0.0;
    std::string run_seeds;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment for every configured seed");
    run_cmd->add_option("--config", run.config_path, "Config file or manifest.json")->required();
    run_cmd->add_option("--out", run.out_dir, "Output directory")->required();
    auto* run_w = run_cmd->add_option("--workers", run_workers, "Worker threads (overrides FEDLAD_WORKERS)");
    auto* run_e = run_cmd->add_option("--epsilon", run_epsilon, "RREF pivot threshold");
    auto* run_s = run_cmd->add_option("--seed", run_seeds, "Seed or comma-separated seeds");

    SweepOptions sweep;
    std::size_t sweep_workers = 1;
    double sweep_epsilon = 0.0;
    std::string sweep_seeds, ratios, aggregators;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run every malicious ratio x aggregator combination");
    sweep_cmd->add_option("--config", sweep.run.config_path, "Config file or manifest.json")->required();
    sweep_cmd->add_option("--out", sweep.run.out_dir, "Output directory")->required();
    auto* sweep_r = sweep_cmd->add_option("--ratios", ratios, "Comma-separated malicious ratios");
    auto* sweep_a = sweep_cmd->add_option("--aggregators", aggregators, "Comma-separated aggregator names");
    auto* sweep_w = sweep_cmd->add_option("--workers", sweep_workers, "Worker threads (overrides FEDLAD_WORKERS)");
    auto* sweep_e = sweep_cmd->add_option("--epsilon", sweep_epsilon, "RREF pivot threshold");
    auto* sweep_s = sweep_cmd->add_option("--seed", sweep_seeds, "Seed or comma-separated seeds");

    RrefOptions rref;
    std::size_t rref_workers = 1;
    double rref_epsilon = 0.0;
    auto* rref_cmd = app.add_subcommand("rref", "Rank, pivot columns and selected rows of a matrix file");
    rref_cmd->add_option("matrix", rref.matrix_path, "Matrix file")->required();
    auto* rref_w = rref_cmd->add_option("--workers", rref_workers, "Worker threads (overrides FEDLAD_WORKERS)");
    auto* rref_e = rref_cmd->add_option("--epsilon", rref_epsilon, "Pivot threshold");

    BenchOptions bench;
    std::string bench_workers;
    auto* bench_cmd = app.add_subcommand("bench", "Time serial against parallel RREF");
    bench_cmd->add_option("--rows", bench.rows, "Matrix rows")->capture_default_str();
    bench_cmd->add_option("--cols", bench.cols, "Matrix columns")->capture_default_str();
    auto* bench_w = bench_cmd->add_option("--workers", bench_workers, "Comma-separated worker counts (default 1,2,4,8)");
    bench_cmd->add_option("--seed", bench.seed, "Matrix seed")->capture_default_str();
    bench_cmd->add_option("--repeats", bench.repeats, "Timing repeats; the best is kept")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (*run_cmd) {
        run.workers = if_set(run_w, run_workers);
        run.epsilon = if_set(run_e, run_epsilon);
        run.seeds = if_set(run_s, run_seeds);
        return cmd_run(run, std::cout, std::cerr);
    }
    if (*sweep_cmd) {
        sweep.run.workers = if_set(sweep_w, sweep_workers);
        sweep.run.epsilon = if_set(sweep_e, sweep_epsilon);
        sweep.run.seeds = if_set(sweep_s, sweep_seeds);
        sweep.ratios = if_set(sweep_r, ratios);
        sweep.aggregators = if_set(sweep_a, aggregators);
        return cmd_sweep(sweep, std::cout, std::cerr);
    }
    if (*rref_cmd) {
        rref.workers = if_set(rref_w, rref_workers);
        rref.epsilon = if_set(rref_e, rref_epsilon);
        return cmd_rref(rref, std::cout, std::cerr);
    }
    bench.workers = if_set(bench_w, bench_workers);
    return cmd_bench(bench, std::cout, std::cerr);
}
