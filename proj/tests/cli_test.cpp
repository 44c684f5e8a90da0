// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fedlad/cli/commands.hpp"
#include "fedlad/cli/config.hpp"

namespace fs = std::filesystem;
using namespace fedlad::cli;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("fedlad_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        rows.push_back(cells);
    }
    return rows;
}

struct Captured {
    int code;
    std::string out;
    std::string err;
};

template <typename Opt, typename Cmd>
Captured capture(Cmd cmd, const Opt& opt) {
    std::ostringstream out, err;
    const int code = cmd(opt, out, err);
    return {code, out.str(), err.str()};
}

RunOptions run_options(const fs::path& config, const fs::path& out) {
    RunOptions o;
    o.config_path = config.string();
    o.out_dir = out.string();
    return o;
}

class ScopedEnv {
public:
    ScopedEnv(const char* name, const char* value) : name_(name) {
        if (const char* old = std::getenv(name)) {
            old_ = old;
        }
        ::setenv(name, value, 1);
    }
    ~ScopedEnv() {
        if (old_) {
            ::setenv(name_, old_->c_str(), 1);
        } else {
            ::unsetenv(name_);
        }
    }

private:
    const char* name_;
    std::optional<std::string> old_;
};

}  // namespace

TEST(Config, DefaultsEncodeDeskProtocol) {
    const auto cfg = parse_config_text("");
    const auto& e = cfg.experiment;
    EXPECT_EQ(e.n_nodes, 10u);
    EXPECT_EQ(e.rounds, 20u);
    EXPECT_EQ(e.dirichlet_alpha, 0.5);
    EXPECT_EQ(e.train.local_epochs, 2u);
    EXPECT_EQ(cfg.seeds.size(), 5u);
    EXPECT_EQ(e.data.n_classes, 4u);
    EXPECT_EQ(e.data.n_train, 4000u);
    EXPECT_EQ(e.data.n_test, 1000u);
    EXPECT_EQ(e.attack.source, 0u);
    EXPECT_EQ(e.attack.target, 1u);
    EXPECT_FALSE(cfg.record_timings);
}

TEST(Config, ParsesEverySection) {
    const auto cfg = parse_config_text(
        "# comment\n[experiment]\nn_nodes = 12\nrounds=4\nmalicious_ratio = 0.25\nseeds = 3, 4\n"
        "[attack]\nsource = 2\ntarget = 3\n"
        "[aggregator]\nkind = krum\nkrum_f = 2\nepsilon = 1e-9\nworkers = 3\n"
        "[train]\nlearning_rate = 0.1\nbatch_size = 16\nlocal_epochs = 1\n"
        "[data]\nspread = 0.5\nn_dims = 3\n"
        "[model]\nhidden = 8, 8\nactivation = tanh\n"
        "[output]\nrecord_timings = true\n");
    const auto& e = cfg.experiment;
    EXPECT_EQ(e.n_nodes, 12u);
    EXPECT_EQ(e.malicious_ratio, 0.25);
    EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{3, 4}));
    EXPECT_EQ(e.attack.source, 2u);
    EXPECT_EQ(e.aggregator.kind, fedlad::aggregation::AggregatorKind::krum);
    EXPECT_EQ(e.aggregator.krum_f, 2u);
    EXPECT_EQ(e.aggregator.rref.epsilon, 1e-9);
    EXPECT_EQ(e.aggregator.parallel.workers, 3u);
    EXPECT_EQ(e.train.batch_size, 16u);
    EXPECT_EQ(e.data.n_dims, 3u);
    EXPECT_EQ(e.hidden, (std::vector<std::size_t>{8, 8}));
    EXPECT_EQ(e.activation, fedlad::learning::Activation::tanh);
    EXPECT_TRUE(cfg.record_timings);
}

TEST(Config, ErrorsCarryLineNumbers) {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            parse_config_text(text);
        } catch (const ConfigError& e) {
            return e.line();
        }
        return 9999;
    };
    EXPECT_EQ(line_of("[experiment]\nrounds = 3\nroundz = 3\n"), 3u);
    EXPECT_EQ(line_of("[experimnt]\nrounds = 3\n"), 2u);
    EXPECT_EQ(line_of("rounds = 3\n"), 1u);
    EXPECT_EQ(line_of("[experiment]\nrounds 3\n"), 2u);
    EXPECT_EQ(line_of("[experiment]\nrounds = three\n"), 2u);
    EXPECT_EQ(line_of("[experiment]\nrounds = 3\nrounds = 4\n"), 3u);
    EXPECT_EQ(line_of("[aggregator]\nkind = mean\n"), 2u);
    EXPECT_EQ(line_of("[train]\nlearning_rate = nan\n"), 2u);
    EXPECT_THROW(parse_config_text("[experiment]\nrounds = 0\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[attack]\ntarget = 0\n"), ConfigError);
}

TEST(Config, SectionsRoundTrip) {
    const auto cfg = parse_config_text(
        "[experiment]\nmalicious_ratio = 0.3\nseeds = 7\n[aggregator]\nkind = trimmed_mean\ntrim_k = 1\n"
        "[train]\nlearning_rate = 0.07\n");
    const auto again = parse_config_text(to_ini(cfg));
    EXPECT_EQ(to_sections(again), to_sections(cfg));
    EXPECT_EQ(to_sections(from_sections(to_sections(cfg))), to_sections(cfg));
}

TEST(CmdRun, MinimalConfigWritesOneRowPerRound) {
    TempDir tmp;
    write_file(tmp / "c.ini", "[experiment]\nrounds = 3\nseeds = 1\n");
    const auto r = capture(cmd_run, run_options(tmp / "c.ini", tmp / "out"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(tmp / "out" / "rounds.csv");
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"round", "seed", "ratio", "aggregator", "asr", "ma",
                                                  "accepted_count", "agg_ms", "train_ms"}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ASSERT_EQ(rows[i].size(), 9u);
        EXPECT_EQ(rows[i][0], std::to_string(i));
        EXPECT_EQ(rows[i][3], "fedavg");
        EXPECT_EQ(rows[i][6], "10");
    }
    EXPECT_TRUE(fs::exists(tmp / "out" / "summary.json"));
    EXPECT_TRUE(fs::exists(tmp / "out" / "manifest.json"));
    EXPECT_FALSE(fs::exists(tmp / "out" / "rounds.csv.tmp"));
}

TEST(CmdRun, SummaryMeanMatchesPerSeedFinalRows) {
    TempDir tmp;
    write_file(tmp / "c.ini", "[experiment]\nrounds = 2\nmalicious_ratio = 0.3\n");
    ASSERT_EQ(capture(cmd_run, run_options(tmp / "c.ini", tmp / "out")).code, 0);
    const auto rows = read_csv(tmp / "out" / "rounds.csv");
    ASSERT_EQ(rows.size(), 1u + 5 * 2);
    double sum = 0.0;
    int finals = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][0] == "2") {
            sum += std::stod(rows[i][5]);
            ++finals;
        }
    }
    ASSERT_EQ(finals, 5);
    const auto summary = nlohmann::json::parse(read_file(tmp / "out" / "summary.json"));
    EXPECT_DOUBLE_EQ(summary["final"]["ma_mean"].get<double>(), sum / 5.0);
    EXPECT_EQ(summary["per_seed"].size(), 5u);
}

TEST(CmdRun, RepeatRunsAndManifestRerunAreByteIdentical) {
    TempDir tmp;
    write_file(tmp / "c.ini", "[experiment]\nrounds = 3\nseeds = 2, 3\nmalicious_ratio = 0.4\n[aggregator]\nkind = fedlad\n");
    ASSERT_EQ(capture(cmd_run, run_options(tmp / "c.ini", tmp / "a")).code, 0);
    ASSERT_EQ(capture(cmd_run, run_options(tmp / "c.ini", tmp / "b")).code, 0);
    ASSERT_EQ(capture(cmd_run, run_options(tmp / "a" / "manifest.json", tmp / "c")).code, 0);
    const auto a = read_file(tmp / "a" / "rounds.csv");
    EXPECT_EQ(a, read_file(tmp / "b" / "rounds.csv"));
    EXPECT_EQ(a, read_file(tmp / "c" / "rounds.csv"));

    auto opt = run_options(tmp / "c.ini", tmp / "d");
    opt.workers = 3;
    ASSERT_EQ(capture(cmd_run, opt).code, 0);
    EXPECT_EQ(a, read_file(tmp / "d" / "rounds.csv"));

    const auto manifest = nlohmann::json::parse(read_file(tmp / "a" / "manifest.json"));
    EXPECT_EQ(manifest["command"], "run");
    EXPECT_EQ(manifest["config"]["aggregator"]["kind"], "fedlad");
    EXPECT_TRUE(manifest.contains("started_at"));
    EXPECT_TRUE(manifest.contains("finished_at"));
    EXPECT_TRUE(manifest["outputs"].contains("rounds_csv"));
}

TEST(CmdRun, TimingsOnlyWhenRequested) {
    TempDir tmp;
    write_file(tmp / "c.ini", "[experiment]\nrounds = 2\nseeds = 1\n[output]\nrecord_timings = true\n");
    ASSERT_EQ(capture(cmd_run, run_options(tmp / "c.ini", tmp / "out")).code, 0);
    const auto rows = read_csv(tmp / "out" / "rounds.csv");
    double train = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        train += std::stod(rows[i][8]);
    }
    EXPECT_GT(train, 0.0);
}

TEST(CmdRun, MalformedConfigExitsTwoWithoutOutputs) {
    TempDir tmp;
    write_file(tmp / "bad.ini", "[experiment]\nrounds = 3\nbogus = 1\n");
    const auto r = capture(cmd_run, run_options(tmp / "bad.ini", tmp / "out"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 3"), std::string::npos);
    EXPECT_FALSE(fs::exists(tmp / "out"));
    EXPECT_EQ(capture(cmd_run, run_options(tmp / "missing.ini", tmp / "out")).code, 2);
    write_file(tmp / "seed.ini", "[experiment]\nrounds = 1\n");
    auto bad_seed = run_options(tmp / "seed.ini", tmp / "out");
    bad_seed.seeds = "x";
    EXPECT_EQ(capture(cmd_run, bad_seed).code, 2);
    EXPECT_FALSE(fs::exists(tmp / "out"));
}

TEST(CmdRun, DivergentTrainingExitsThree) {
    TempDir tmp;
    std::string data = "f0,f1,label\n";
    for (int i = 0; i < 200; ++i) {
        data += "1e300,-1e300," + std::to_string(i % 2) + "\n";
    }
    write_file(tmp / "data.csv", data);
    write_file(tmp / "c.ini", "[experiment]\nrounds = 1\nseeds = 1\nn_nodes = 2\n[data]\ncsv_path = " +
                                  (tmp / "data.csv").string() + "\n");
    const auto r = capture(cmd_run, run_options(tmp / "c.ini", tmp / "out"));
    EXPECT_EQ(r.code, 3) << r.err;
    EXPECT_FALSE(fs::exists(tmp / "out" / "rounds.csv"));
}

TEST(CmdRun, IngestsCsvDataset) {
    TempDir tmp;
    const auto d = fedlad::learning::make_blobs(300, 3, 2, 1.0, 1);
    std::ofstream f(tmp / "data.csv");
    fedlad::learning::write_dataset_csv(f, d);
    f.close();
    write_file(tmp / "c.ini", "[experiment]\nrounds = 2\nseeds = 1\nn_nodes = 4\n[data]\ncsv_path = " +
                                  (tmp / "data.csv").string() + "\n");
    const auto r = capture(cmd_run, run_options(tmp / "c.ini", tmp / "out"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_csv(tmp / "out" / "rounds.csv").size(), 3u);
}

TEST(CmdSweep, ProducesLongFormatRows) {
    TempDir tmp;
    write_file(tmp / "c.ini", "[experiment]\nrounds = 3\nseeds = 1\n");
    SweepOptions opt{run_options(tmp / "c.ini", tmp / "out"), "0,0.5", "fedavg,fedlad"};
    const auto r = capture(cmd_sweep, opt);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(tmp / "out" / "sweep.csv");
    ASSERT_EQ(rows.size(), 1u + 12);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"ratio", "aggregator", "seed", "round", "asr", "ma"}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][0] == "0") {
            EXPECT_LE(std::stod(rows[i][4]), 0.15);
        }
    }

    // A sweep manifest carries its ratios and aggregators.
    SweepOptions again{run_options(tmp / "out" / "manifest.json", tmp / "again"), std::nullopt, std::nullopt};
    ASSERT_EQ(capture(cmd_sweep, again).code, 0);
    EXPECT_EQ(read_file(tmp / "out" / "sweep.csv"), read_file(tmp / "again" / "sweep.csv"));
}

TEST(CmdSweep, RejectsBadLists) {
    TempDir tmp;
    write_file(tmp / "c.ini", "[experiment]\nrounds = 1\nseeds = 1\n");
    auto run = [&](std::optional<std::string> ratios, std::optional<std::string> aggs) {
        return capture(cmd_sweep, SweepOptions{run_options(tmp / "c.ini", tmp / "out"), ratios, aggs}).code;
    };
    EXPECT_EQ(run("0.2,0.2", "fedavg"), 2);
    EXPECT_EQ(run("0.2,1.5", "fedavg"), 2);
    EXPECT_EQ(run("0.2", "fedavg,mean"), 2);
    EXPECT_EQ(run("0.2", "fedavg,fedavg"), 2);
    EXPECT_EQ(run(std::nullopt, "fedavg"), 2);
    EXPECT_EQ(run("a", "fedavg"), 2);
    EXPECT_FALSE(fs::exists(tmp / "out"));
}

TEST(CmdRref, IdentityAndWorkerInvariance) {
    TempDir tmp;
    write_file(tmp / "id.txt", "3 3\n1 0 0\n0 1 0\n0 0 1\n");
    RrefOptions opt{(tmp / "id.txt").string(), std::nullopt, std::nullopt};
    const auto r = capture(cmd_rref, opt);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["rank"], 3);
    EXPECT_EQ(j["selected_rows"], nlohmann::json({0, 1, 2}));

    std::ostringstream m;
    const auto big = fedlad::parallel::random_matrix_with_dependencies(40, 300, 0.3, 5);
    fedlad::linalg::write_matrix(m, big);
    write_file(tmp / "big.txt", m.str());
    RrefOptions one{(tmp / "big.txt").string(), 1, std::nullopt};
    RrefOptions eight{(tmp / "big.txt").string(), 8, std::nullopt};
    EXPECT_EQ(capture(cmd_rref, one).out, capture(cmd_rref, eight).out);
}

TEST(CmdRref, ParseFailuresExitTwo) {
    TempDir tmp;
    write_file(tmp / "bad.txt", "2 2\n1 2\nhello world\n");
    const auto r = capture(cmd_rref, RrefOptions{(tmp / "bad.txt").string(), std::nullopt, std::nullopt});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 3"), std::string::npos);
    EXPECT_EQ(capture(cmd_rref, RrefOptions{(tmp / "none.txt").string(), std::nullopt, std::nullopt}).code, 2);
    write_file(tmp / "ok.txt", "1 2\n1 2\n");
    EXPECT_EQ(capture(cmd_rref, RrefOptions{(tmp / "ok.txt").string(), std::nullopt, -1.0}).code, 2);
    EXPECT_EQ(capture(cmd_rref, RrefOptions{(tmp / "ok.txt").string(), 0, std::nullopt}).code, 2);
}

TEST(CmdBench, CsvShapeAndSingleWorkerBaseline) {
    BenchOptions opt;
    opt.rows = 8;
    opt.cols = 20000;
    opt.workers = "1,2";
    opt.repeats = 3;
    const auto r = capture(cmd_bench, opt);
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "workers,serial_ms,parallel_ms,speedup");
    std::vector<double> speedups;
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::vector<std::string> cells;
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        ASSERT_EQ(cells.size(), 4u);
        speedups.push_back(std::stod(cells[3]));
    }
    ASSERT_EQ(speedups.size(), 2u);
    EXPECT_GT(speedups[0], 0.5);
    EXPECT_LT(speedups[0], 2.0);
}

TEST(CmdBench, SpeedupGrowsUpToCoreCount) {
    const std::size_t cores = std::max(1u, std::thread::hardware_concurrency());
    std::string list;
    std::vector<std::size_t> counts;
    for (std::size_t w = 1; w <= std::min<std::size_t>(cores, 8); w *= 2) {
        counts.push_back(w);
        list += (list.empty() ? "" : ",") + std::to_string(w);
    }
    BenchOptions opt;
    opt.rows = 10;
    opt.cols = 200000;
    opt.workers = list;
    opt.repeats = 3;
    const auto r = capture(cmd_bench, opt);
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    double prev = 0.0;
    while (std::getline(in, line)) {
        const double s = std::stod(line.substr(line.rfind(',') + 1));
        EXPECT_GE(s, prev * 0.85) << line;
        prev = s;
    }
}

TEST(CmdBench, WorkersFromEnvironmentAndFlagWins) {
    BenchOptions opt;
    opt.rows = 4;
    opt.cols = 1000;
    {
        ScopedEnv env("FEDLAD_WORKERS", "3");
        const auto r = capture(cmd_bench, opt);
        ASSERT_EQ(r.code, 0);
        EXPECT_NE(r.out.find("\n3,"), std::string::npos);
        opt.workers = "2";
        const auto flagged = capture(cmd_bench, opt);
        EXPECT_NE(flagged.out.find("\n2,"), std::string::npos);
        EXPECT_EQ(flagged.out.find("\n3,"), std::string::npos);
    }
    {
        ScopedEnv env("FEDLAD_WORKERS", "lots");
        opt.workers.reset();
        EXPECT_EQ(capture(cmd_bench, opt).code, 2);
    }
}

#ifdef FEDLAD_CLI_PATH
TEST(Binary, ExitCodes) {
    TempDir tmp;
    const std::string exe = FEDLAD_CLI_PATH;
    auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    write_file(tmp / "m.txt", "2 2\n1 0\n0 1\n");
    EXPECT_EQ(status(exe + " rref " + (tmp / "m.txt").string()), 0);
    EXPECT_EQ(status(exe), 2);
    EXPECT_EQ(status(exe + " frobnicate"), 2);
    EXPECT_EQ(status(exe + " run --out " + (tmp / "o").string()), 2);
    write_file(tmp / "g.txt", "garbage\n");
    EXPECT_EQ(status(exe + " rref " + (tmp / "g.txt").string()), 2);
    EXPECT_EQ(status(exe + " --version"), 0);
}
#endif
