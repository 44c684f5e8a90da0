// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_CLI_COMMANDS_HPP
#define FEDLAD_CLI_COMMANDS_HPP

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedlad/cli/config.hpp"
#include "fedlad/linalg/matrix_io.hpp"
#include "fedlad/parallel/bench.hpp"
#include "fedlad/parallel/parallel_rref.hpp"
#include "fedlad/simulation/experiment.hpp"

#ifndef FEDLAD_VERSION
#define FEDLAD_VERSION "0.0.0"
#endif

namespace fedlad::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

using Json = nlohmann::ordered_json;

/// Usage or config problem: exit 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::size_t> workers;
    std::optional<double> epsilon;
    /// Comma-separated; replaces the config's seed list.
    std::optional<std::string> seeds;
};

struct SweepOptions {
    RunOptions run;
    std::optional<std::string> ratios;
    std::optional<std::string> aggregators;
};

struct RrefOptions {
    std::string matrix_path;
    std::optional<std::size_t> workers;
    std::optional<double> epsilon;
};

struct BenchOptions {
    std::size_t rows = 10;
    std::size_t cols = 100000;
    /// Comma-separated worker counts.
    std::optional<std::string> workers;
    std::uint64_t seed = 0;
    std::size_t repeats = 1;
};

namespace detail {

/// --workers beats FEDLAD_WORKERS; neither set means no override.
inline std::optional<std::size_t> resolve_workers(std::optional<std::size_t> flag) {
    if (flag) {
        if (*flag == 0) {
            throw UsageError("--workers must be at least 1");
        }
        return flag;
    }
    const char* env = std::getenv("FEDLAD_WORKERS");
    if (env == nullptr || *env == '\0') {
        return std::nullopt;
    }
    std::size_t n = 0;
    try {
        n = cli::detail::parse_number<std::size_t>(env, 0, "FEDLAD_WORKERS");
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    if (n == 0) {
        throw UsageError("FEDLAD_WORKERS must be at least 1");
    }
    return n;
}

inline std::string iso_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Writes to a sibling temp file, then renames over the target.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot write '" + tmp.string() + "'");
        }
        f << content;
        f.flush();
        if (!f) {
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

inline std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw UsageError("cannot open '" + path + "'");
    }
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

inline Json sections_to_json(const Sections& sections) {
    Json j = Json::object();
    for (const auto& [section, pairs] : sections) {
        Json s = Json::object();
        for (const auto& [key, value] : pairs) {
            s[key] = value;
        }
        j[section] = s;
    }
    return j;
}

inline Sections json_to_sections(const Json& j) {
    if (!j.is_object()) {
        throw ConfigError(0, "manifest 'config' must be an object");
    }
    Sections out;
    for (const auto& [section, body] : j.items()) {
        if (!body.is_object()) {
            throw ConfigError(0, "manifest section '" + section + "' must be an object");
        }
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const auto& [key, value] : body.items()) {
            if (!value.is_string()) {
                throw ConfigError(0, "manifest value '" + section + "." + key + "' must be a string");
            }
            pairs.emplace_back(key, value.get<std::string>());
        }
        out.emplace_back(section, std::move(pairs));
    }
    return out;
}

/// Config text or a manifest.json written by an earlier run.
struct LoadedConfig {
    RunConfig config;
    /// Present when loading a sweep manifest.
    std::optional<Json> sweep;
};

inline LoadedConfig load_config(const std::string& path) {
    const std::string text = slurp(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        Json j;
        try {
            j = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw ConfigError(0, std::string("manifest is not valid JSON: ") + e.what());
        }
        if (!j.contains("config")) {
            throw ConfigError(0, "manifest has no 'config' object");
        }
        LoadedConfig out{from_sections(json_to_sections(j["config"])), std::nullopt};
        if (j.contains("sweep")) {
            out.sweep = j["sweep"];
        }
        return out;
    }
    return {parse_config_text(text), std::nullopt};
}

inline void apply_overrides(RunConfig& cfg, const RunOptions& opt) {
    if (const auto w = resolve_workers(opt.workers)) {
        cfg.experiment.aggregator.parallel.workers = *w;
        cfg.experiment.training_workers = *w;
    }
    if (opt.epsilon) {
        cfg.experiment.aggregator.rref.epsilon = *opt.epsilon;
    }
    if (opt.seeds) {
        cfg.seeds = cli::detail::parse_list<std::uint64_t>(*opt.seeds, 0, "--seed");
    }
    validate(cfg);
    if (!cfg.experiment.data.csv_path.empty() && !std::filesystem::exists(cfg.experiment.data.csv_path)) {
        throw ConfigError(0, "data.csv_path '" + cfg.experiment.data.csv_path + "' does not exist");
    }
}

inline std::string csv_number(double x) { return cli::detail::format_double(x); }

inline std::string csv_optional(const std::optional<double>& x) { return x ? csv_number(*x) : std::string(); }

struct SeedRun {
    std::uint64_t seed = 0;
    simulation::ExperimentResult result;
};

inline std::vector<SeedRun> run_seeds(const RunConfig& cfg) {
    std::vector<SeedRun> out;
    for (std::uint64_t seed : cfg.seeds) {
        auto exp = cfg.experiment;
        exp.set_seed(seed);
        out.push_back({seed, simulation::run_experiment(exp)});
    }
    return out;
}

inline std::string rounds_csv(const RunConfig& cfg, const std::vector<SeedRun>& runs) {
    std::ostringstream csv;
    csv << "round,seed,ratio,aggregator,asr,ma,accepted_count,agg_ms,train_ms\n";
    const std::string ratio = csv_number(cfg.experiment.malicious_ratio);
    const std::string agg(aggregation::to_string(cfg.experiment.aggregator.kind));
    for (const auto& run : runs) {
        for (const auto& row : run.result.rounds) {
            csv << row.round << ',' << run.seed << ',' << ratio << ',' << agg << ',' << csv_optional(row.asr) << ','
                << csv_number(row.ma) << ',' << row.accepted_count << ','
                << csv_number(cfg.record_timings ? row.aggregation_ms : 0.0) << ','
                << csv_number(cfg.record_timings ? row.training_ms : 0.0) << '\n';
        }
    }
    return csv.str();
}

inline Json mean_or_null(const std::vector<double>& xs) {
    if (xs.empty()) {
        return nullptr;
    }
    double s = 0.0;
    for (double x : xs) {
        s += x;
    }
    return s / static_cast<double>(xs.size());
}

inline Json summary_json(const RunConfig& cfg, const std::vector<SeedRun>& runs, double wall_ms) {
    Json j;
    j["aggregator"] = std::string(aggregation::to_string(cfg.experiment.aggregator.kind));
    j["malicious_ratio"] = cfg.experiment.malicious_ratio;
    j["seeds"] = cfg.seeds;
    j["rounds"] = cfg.experiment.rounds;

    std::vector<double> final_asr, final_ma;
    Json per_seed = Json::array();
    for (const auto& run : runs) {
        const auto& last = run.result.rounds.back();
        if (last.asr) {
            final_asr.push_back(*last.asr);
        }
        final_ma.push_back(last.ma);
        per_seed.push_back({{"seed", run.seed},
                            {"final_asr", last.asr ? Json(*last.asr) : Json(nullptr)},
                            {"final_ma", last.ma},
                            {"malicious_nodes", run.result.malicious}});
    }
    j["final"] = {{"asr_mean", mean_or_null(final_asr)}, {"ma_mean", mean_or_null(final_ma)}};
    j["per_seed"] = per_seed;

    Json per_round = Json::array();
    double agg_total = 0.0;
    double train_total = 0.0;
    for (std::size_t r = 0; r < cfg.experiment.rounds; ++r) {
        std::vector<double> asr, ma;
        for (const auto& run : runs) {
            const auto& row = run.result.rounds[r];
            if (row.asr) {
                asr.push_back(*row.asr);
            }
            ma.push_back(row.ma);
            agg_total += row.aggregation_ms;
            train_total += row.training_ms;
        }
        per_round.push_back({{"round", r + 1}, {"asr_mean", mean_or_null(asr)}, {"ma_mean", mean_or_null(ma)}});
    }
    j["per_round"] = per_round;
    j["timing_ms"] = {{"aggregation_total", agg_total}, {"training_total", train_total}, {"wall", wall_ms}};
    return j;
}

inline Json manifest_json(const std::string& command, const RunConfig& cfg, const std::string& started,
                          const Json& outputs) {
    Json j;
    j["tool"] = "fedlad";
    j["version"] = FEDLAD_VERSION;
    j["command"] = command;
    j["config"] = sections_to_json(to_sections(cfg));
    j["started_at"] = started;
    j["finished_at"] = iso_utc_now();
    j["outputs"] = outputs;
    return j;
}

/// Maps exceptions onto exit codes and reports them on `err`.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const linalg::MatrixParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace detail

/// Runs the experiment for every configured seed and writes rounds.csv, summary.json, manifest.json.
inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const std::string started = detail::iso_utc_now();
        auto cfg = detail::load_config(opt.config_path).config;
        detail::apply_overrides(cfg, opt);
        if (opt.out_dir.empty()) {
            throw UsageError("--out is required");
        }

        const auto t0 = std::chrono::steady_clock::now();
        const auto runs = detail::run_seeds(cfg);
        const double wall =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

        const std::filesystem::path dir(opt.out_dir);
        std::filesystem::create_directories(dir);
        const auto rounds_path = dir / "rounds.csv";
        const auto summary_path = dir / "summary.json";
        detail::write_atomically(rounds_path, detail::rounds_csv(cfg, runs));
        detail::write_atomically(summary_path, detail::summary_json(cfg, runs, wall).dump(2) + "\n");
        const Json outputs{{"rounds_csv", rounds_path.string()}, {"summary_json", summary_path.string()}};
        detail::write_atomically(dir / "manifest.json",
                                 detail::manifest_json("run", cfg, started, outputs).dump(2) + "\n");
        out << "wrote " << rounds_path.string() << '\n';
        return kExitOk;
    });
}

/// Every ratio x aggregator combination, each run as in cmd_run; long-format sweep.csv plus manifest.json.
inline int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const std::string started = detail::iso_utc_now();
        auto loaded = detail::load_config(opt.run.config_path);
        auto& base = loaded.config;
        detail::apply_overrides(base, opt.run);
        if (opt.run.out_dir.empty()) {
            throw UsageError("--out is required");
        }

        std::string ratio_text = opt.ratios.value_or("");
        std::string agg_text = opt.aggregators.value_or("");
        if (loaded.sweep) {
            if (!opt.ratios && loaded.sweep->contains("ratios")) {
                ratio_text = (*loaded.sweep)["ratios"].get<std::string>();
            }
            if (!opt.aggregators && loaded.sweep->contains("aggregators")) {
                agg_text = (*loaded.sweep)["aggregators"].get<std::string>();
            }
        }
        if (ratio_text.empty()) {
            throw UsageError("--ratios is required");
        }
        if (agg_text.empty()) {
            agg_text = std::string(aggregation::to_string(base.experiment.aggregator.kind));
        }

        std::vector<double> ratios;
        try {
            ratios = cli::detail::parse_list<double>(ratio_text, 0, "--ratios");
        } catch (const ConfigError& e) {
            throw UsageError(e.what());
        }
        for (std::size_t i = 0; i < ratios.size(); ++i) {
            if (!(ratios[i] >= 0.0 && ratios[i] <= 1.0)) {
                throw UsageError("--ratios: " + cli::detail::format_double(ratios[i]) + " is outside [0, 1]");
            }
            for (std::size_t k = 0; k < i; ++k) {
                if (ratios[k] == ratios[i]) {
                    throw UsageError("--ratios: duplicate value " + cli::detail::format_double(ratios[i]));
                }
            }
        }
        std::vector<aggregation::AggregatorKind> kinds;
        for (const auto& name : cli::detail::split_list(agg_text)) {
            const auto kind = aggregation::parse_aggregator(name);
            if (!kind) {
                throw UsageError("--aggregators: unknown aggregator '" + name + "'");
            }
            if (std::find(kinds.begin(), kinds.end(), *kind) != kinds.end()) {
                throw UsageError("--aggregators: duplicate aggregator '" + name + "'");
            }
            kinds.push_back(*kind);
        }
        // Validate every combination before doing any work.
        std::vector<RunConfig> plan;
        for (double r : ratios) {
            for (auto kind : kinds) {
                RunConfig c = base;
                c.experiment.malicious_ratio = r;
                c.experiment.aggregator.kind = kind;
                validate(c);
                plan.push_back(std::move(c));
            }
        }

        std::ostringstream csv;
        csv << "ratio,aggregator,seed,round,asr,ma\n";
        for (const auto& c : plan) {
            const std::string ratio = detail::csv_number(c.experiment.malicious_ratio);
            const std::string agg(aggregation::to_string(c.experiment.aggregator.kind));
            for (const auto& run : detail::run_seeds(c)) {
                for (const auto& row : run.result.rounds) {
                    csv << ratio << ',' << agg << ',' << run.seed << ',' << row.round << ','
                        << detail::csv_optional(row.asr) << ',' << detail::csv_number(row.ma) << '\n';
                }
            }
        }

        const std::filesystem::path dir(opt.run.out_dir);
        std::filesystem::create_directories(dir);
        const auto sweep_path = dir / "sweep.csv";
        detail::write_atomically(sweep_path, csv.str());
        auto manifest = detail::manifest_json("sweep", base, started, Json{{"sweep_csv", sweep_path.string()}});
        manifest["sweep"] = {{"ratios", ratio_text}, {"aggregators", agg_text}};
        detail::write_atomically(dir / "manifest.json", manifest.dump(2) + "\n");
        out << "wrote " << sweep_path.string() << '\n';
        return kExitOk;
    });
}

/// Prints {"rank":..,"pivot_cols":[..],"selected_rows":[..]} for a matrix file.
inline int cmd_rref(const RrefOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        linalg::DenseMatrix m = [&] {
            std::ifstream f(opt.matrix_path);
            if (!f) {
                throw UsageError("cannot open '" + opt.matrix_path + "'");
            }
            return linalg::read_matrix(f);
        }();
        linalg::RrefConfig cfg;
        cfg.epsilon = opt.epsilon;
        parallel::ParallelConfig pcfg;
        pcfg.workers = detail::resolve_workers(opt.workers).value_or(1);
        linalg::RrefOutcome result;
        try {
            result = parallel::rref_parallel(m, cfg, pcfg);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        Json j;
        j["rank"] = result.rank;
        j["pivot_cols"] = result.pivot_cols;
        j["selected_rows"] = result.selected_rows;
        out << j.dump() << '\n';
        return kExitOk;
    });
}

/// CSV: workers,serial_ms,parallel_ms,speedup for each worker count.
inline int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        if (opt.rows == 0 || opt.cols == 0) {
            throw UsageError("--rows and --cols must be positive");
        }
        std::vector<std::size_t> workers{1, 2, 4, 8};
        if (opt.workers) {
            try {
                workers = cli::detail::parse_list<std::size_t>(*opt.workers, 0, "--workers");
            } catch (const ConfigError& e) {
                throw UsageError(e.what());
            }
        } else if (const auto env = detail::resolve_workers(std::nullopt)) {
            workers = {*env};
        }
        for (std::size_t w : workers) {
            if (w == 0) {
                throw UsageError("--workers entries must be at least 1");
            }
        }
        out << "workers,serial_ms,parallel_ms,speedup\n";
        for (std::size_t w : workers) {
            const auto r = parallel::bench_rref(opt.rows, opt.cols, w, opt.seed, opt.repeats);
            if (!r.outcomes_match) {
                throw std::runtime_error("parallel RREF disagreed with serial at " + std::to_string(w) + " workers");
            }
            out << w << ',' << detail::csv_number(r.serial_ms) << ',' << detail::csv_number(r.parallel_ms) << ','
                << detail::csv_number(r.speedup) << '\n';
        }
        return kExitOk;
    });
}

}  // namespace fedlad::cli

#endif  // FEDLAD_CLI_COMMANDS_HPP
