// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_SIMULATION_EXPERIMENT_HPP
#define FEDLAD_SIMULATION_EXPERIMENT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedlad/aggregation/aggregators.hpp"
#include "fedlad/aggregation/flatten.hpp"
#include "fedlad/learning/dataset.hpp"
#include "fedlad/learning/mlp.hpp"
#include "fedlad/learning/train.hpp"
#include "fedlad/parallel/thread_pool.hpp"
#include "fedlad/simulation/partition.hpp"

namespace fedlad::simulation {

using learning::ModelParams;

enum class Role { benign, malicious };

struct NodeSpec {
    std::size_t node_id = 0;
    Role role = Role::benign;
    /// Already label-flipped for malicious nodes.
    Dataset shard;
};

struct DataConfig {
    /// Synthetic blobs are used when csv_path is empty.
    std::string csv_path;
    std::size_t n_train = 4000;
    std::size_t n_test = 1000;
    std::size_t n_classes = 4;
    std::size_t n_dims = 2;
    double spread = 1.0;
    /// Held-out share when reading a CSV.
    double test_fraction = 0.2;
};

struct ExperimentConfig {
    std::size_t n_nodes = 10;
    double malicious_ratio = 0.0;
    AttackSpec attack;
    aggregation::AggregatorConfig aggregator;
    learning::TrainConfig train;
    std::size_t rounds = 20;
    double dirichlet_alpha = 0.5;
    std::uint64_t data_seed = 0;
    std::uint64_t node_seed = 0;
    std::uint64_t train_seed = 0;
    DataConfig data;
    std::vector<std::size_t> hidden{32};
    learning::Activation activation = learning::Activation::relu;
    /// Nodes trained concurrently per round; results do not depend on it.
    std::size_t training_workers = 1;

    /// Derives the data, node and training seeds from one experiment seed.
    void set_seed(std::uint64_t seed) {
        data_seed = learning::derive_seed(seed, 1);
        node_seed = learning::derive_seed(seed, 2);
        train_seed = learning::derive_seed(seed, 3);
    }

    /// Checks everything that can be checked before loading data.
    void validate() const {
        if (n_nodes == 0) {
            throw std::invalid_argument("experiment: n_nodes must be at least 1");
        }
        if (rounds == 0) {
            throw std::invalid_argument("experiment: rounds must be at least 1");
        }
        if (!(malicious_ratio >= 0.0 && malicious_ratio <= 1.0)) {
            throw std::invalid_argument("experiment: malicious_ratio must lie in [0, 1]");
        }
        if (!(dirichlet_alpha > 0.0) || !std::isfinite(dirichlet_alpha)) {
            throw std::invalid_argument("experiment: dirichlet_alpha must be positive and finite");
        }
        train.validate();
        for (std::size_t h : hidden) {
            if (h == 0) {
                throw std::invalid_argument("experiment: hidden layer widths must be positive");
            }
        }
        if (data.csv_path.empty()) {
            if (data.n_train == 0 || data.n_test == 0) {
                throw std::invalid_argument("experiment: n_train and n_test must be positive");
            }
            if (data.n_classes < 2 || data.n_dims == 0) {
                throw std::invalid_argument("experiment: blobs need n_classes >= 2 and n_dims >= 1");
            }
            if (!(data.spread > 0.0) || !std::isfinite(data.spread)) {
                throw std::invalid_argument("experiment: spread must be positive and finite");
            }
            attack.validate(data.n_classes);
        } else if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) {
            throw std::invalid_argument("experiment: test_fraction must lie in (0, 1)");
        }
        using aggregation::AggregatorKind;
        if (aggregator.kind == AggregatorKind::trimmed_mean && 2 * aggregator.resolved_trim_k(n_nodes) >= n_nodes) {
            throw std::invalid_argument("experiment: trimmed_mean needs 2k < n_nodes");
        }
        if (aggregator.kind == AggregatorKind::krum && n_nodes < aggregator.resolved_krum_f(n_nodes) + 3) {
            throw std::invalid_argument("experiment: krum needs n_nodes >= f + 3");
        }
        if (aggregator.parallel.workers == 0 || training_workers == 0) {
            throw std::invalid_argument("experiment: worker counts must be at least 1");
        }
    }
};

struct MetricsRow {
    std::size_t round = 0;
    /// Absent when the test set has no source-class samples.
    std::optional<double> asr;
    double ma = 0.0;
    /// Indexed by node id.
    std::vector<bool> accepted;
    std::vector<bool> failed;
    std::size_t accepted_count = 0;
    bool degraded = false;
    double aggregation_ms = 0.0;
    double training_ms = 0.0;
};

/// Share of source-class test samples predicted as the target class.
inline std::optional<double> asr(const ModelParams& global, const Dataset& test, const AttackSpec& attack) {
    const auto pred = learning::predict(global, test);
    std::size_t source = 0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (test.labels[i] == attack.source) {
            ++source;
            hit += pred[i] == attack.target ? 1 : 0;
        }
    }
    if (source == 0) {
        return std::nullopt;
    }
    return static_cast<double>(hit) / static_cast<double>(source);
}

inline double ma(const ModelParams& global, const Dataset& test) { return learning::accuracy(global, test); }

/// Layer names are "layerK.weight" (out x in) and "layerK.bias".
inline aggregation::LayerShapes param_shapes(const ModelParams& p) {
    aggregation::LayerShapes shapes;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& layer = p.layers[l];
        shapes.push_back({"layer" + std::to_string(l) + ".weight", {layer.out, layer.in}});
        shapes.push_back({"layer" + std::to_string(l) + ".bias", {layer.out}});
    }
    return shapes;
}

inline std::vector<double> to_flat(const ModelParams& p) {
    std::vector<aggregation::NamedArray> arrays;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& layer = p.layers[l];
        arrays.push_back({"layer" + std::to_string(l) + ".weight", {layer.out, layer.in}, layer.weight});
        arrays.push_back({"layer" + std::to_string(l) + ".bias", {layer.out}, layer.bias});
    }
    return aggregation::flatten(arrays, param_shapes(p));
}

/// Inverse of to_flat; `like` supplies the layer structure and activation.
inline ModelParams from_flat(std::span<const double> v, const ModelParams& like) {
    const auto arrays = aggregation::unflatten(v, param_shapes(like));
    ModelParams out = like;
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
        out.layers[l].weight = arrays[2 * l].values;
        out.layers[l].bias = arrays[2 * l + 1].values;
    }
    return out;
}

struct RoundOutput {
    ModelParams global;
    MetricsRow metrics;
};

/*
 * One communication round: every node trains a copy of the global model on its
 * shard, the updates go to the configured aggregator, and the new global model
 * is scored on `test`. A node whose training diverges is left out of the
 * aggregation and marked in `failed`.
 */
inline RoundOutput run_round(const ModelParams& global, std::span<const NodeSpec> nodes, const ExperimentConfig& cfg,
                             const Dataset& test, std::size_t round, parallel::ThreadPool* pool = nullptr) {
    using clock = std::chrono::steady_clock;
    if (nodes.empty()) {
        throw std::invalid_argument("run_round: no nodes");
    }
    const std::size_t n = nodes.size();
    std::vector<std::optional<learning::TrainResult>> trained(n);

    const auto t0 = clock::now();
    auto train_one = [&](std::size_t k) {
        learning::TrainConfig tc = cfg.train;
        tc.seed = learning::derive_seed(cfg.train_seed, round + 1, nodes[k].node_id);
        try {
            trained[k] = learning::train_local(global, nodes[k].shard, tc);
        } catch (const std::domain_error&) {
            trained[k].reset();
        }
    };
    if (pool != nullptr) {
        pool->run(n, train_one);
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            train_one(k);
        }
    }
    const auto t1 = clock::now();

    std::size_t max_id = 0;
    for (const auto& node : nodes) {
        max_id = std::max(max_id, node.node_id);
    }
    MetricsRow row;
    row.round = round;
    row.accepted.assign(max_id + 1, false);
    row.failed.assign(max_id + 1, false);

    std::vector<aggregation::ModelUpdate> updates;
    const auto shapes = param_shapes(global);
    for (std::size_t k = 0; k < n; ++k) {
        if (trained[k]) {
            updates.push_back({nodes[k].node_id, to_flat(trained[k]->params), shapes});
        } else {
            row.failed[nodes[k].node_id] = true;
        }
    }
    if (updates.empty()) {
        throw std::runtime_error("round " + std::to_string(round) + ": training failed on every node");
    }

    const auto t2 = clock::now();
    const auto report = aggregation::aggregate(updates, cfg.aggregator);
    const auto t3 = clock::now();

    for (std::size_t i = 0; i < report.node_ids.size(); ++i) {
        if (report.accepted[i]) {
            row.accepted[report.node_ids[i]] = true;
            ++row.accepted_count;
        }
    }
    row.degraded = report.degraded;
    row.training_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    row.aggregation_ms = std::chrono::duration<double, std::milli>(t3 - t2).count();

    RoundOutput out{from_flat(report.global, global), std::move(row)};
    if (!out.global.all_finite()) {
        throw std::runtime_error("round " + std::to_string(round) + ": aggregated model is not finite");
    }
    out.metrics.asr = asr(out.global, test, cfg.attack);
    out.metrics.ma = ma(out.global, test);
    return out;
}

/// Train/test split plus the node setup used by run_experiment.
struct ExperimentSetup {
    Dataset train;
    Dataset test;
    std::vector<std::size_t> malicious;
    std::vector<NodeSpec> nodes;
    ModelParams initial;
};

inline ExperimentSetup prepare_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentSetup s;
    if (cfg.data.csv_path.empty()) {
        const auto all = learning::make_blobs(cfg.data.n_train + cfg.data.n_test, cfg.data.n_classes,
                                              cfg.data.n_dims, cfg.data.spread, cfg.data_seed);
        s.train = all.slice(0, cfg.data.n_train);
        s.test = all.slice(cfg.data.n_train, cfg.data.n_test);
    } else {
        const auto all = learning::read_dataset_csv_file(cfg.data.csv_path);
        all.validate();
        cfg.attack.validate(all.n_classes);
        std::vector<std::size_t> order(all.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(cfg.data_seed);
        std::shuffle(order.begin(), order.end(), rng);
        const auto n_test = static_cast<std::size_t>(
            std::floor(cfg.data.test_fraction * static_cast<double>(all.size()) + 0.5));
        if (n_test == 0 || n_test >= all.size()) {
            throw std::invalid_argument("experiment: dataset too small for the requested test split");
        }
        const std::span<const std::size_t> idx(order);
        s.train = all.subset(idx.subspan(0, all.size() - n_test));
        s.test = all.subset(idx.subspan(all.size() - n_test));
    }

    auto shards = partition_dirichlet(s.train, cfg.n_nodes, cfg.dirichlet_alpha,
                                      learning::derive_seed(cfg.node_seed, 1));
    s.malicious = select_malicious(cfg.n_nodes, cfg.malicious_ratio, learning::derive_seed(cfg.node_seed, 2));
    for (std::size_t k = 0; k < cfg.n_nodes; ++k) {
        const bool bad = std::binary_search(s.malicious.begin(), s.malicious.end(), k);
        s.nodes.push_back({k, bad ? Role::malicious : Role::benign,
                           bad ? flip_labels(shards[k], cfg.attack) : std::move(shards[k])});
    }
    const auto spec =
        learning::MlpSpec::with_hidden(s.train.n_dims, cfg.hidden, s.train.n_classes, cfg.activation);
    s.initial = learning::init_params(spec, learning::derive_seed(cfg.train_seed, 0));
    return s;
}

struct ExperimentResult {
    std::vector<MetricsRow> rounds;
    std::vector<std::size_t> malicious;
    ModelParams final_global;
};

/// Deterministic for fixed seeds, whatever training_workers is.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    auto setup = prepare_experiment(cfg);
    std::optional<parallel::ThreadPool> pool;
    if (cfg.training_workers > 1) {
        pool.emplace(cfg.training_workers);
    }
    ExperimentResult out;
    out.malicious = setup.malicious;
    ModelParams global = setup.initial;
    for (std::size_t r = 0; r < cfg.rounds; ++r) {
        auto step = run_round(global, setup.nodes, cfg, setup.test, r + 1, pool ? &*pool : nullptr);
        global = std::move(step.global);
        out.rounds.push_back(std::move(step.metrics));
    }
    out.final_global = std::move(global);
    return out;
}

}  // namespace fedlad::simulation

#endif  // FEDLAD_SIMULATION_EXPERIMENT_HPP
