// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_LEARNING_TRAIN_HPP
#define FEDLAD_LEARNING_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "fedlad/learning/dataset.hpp"
#include "fedlad/learning/mlp.hpp"

namespace fedlad::learning {

/// Plain mini-batch SGD, no momentum.
struct TrainConfig {
    std::size_t local_epochs = 2;
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw std::invalid_argument("TrainConfig: learning_rate must be positive and finite");
        }
        if (batch_size == 0) {
            throw std::invalid_argument("TrainConfig: batch_size must be at least 1");
        }
    }
};

struct TrainResult {
    ModelParams params;
    /// Shard had no samples; params are the unchanged input.
    bool empty_shard = false;
    /// Sample-weighted mean loss seen during each epoch.
    std::vector<double> epoch_losses;
};

/*
 * Runs cfg.local_epochs passes over the shard, reshuffling it at the start of
 * every epoch. A zero learning rate is accepted here and leaves the
 * parameters untouched. Throws std::domain_error when training diverges.
 */
inline TrainResult train_local(const ModelParams& start, const Dataset& shard, const TrainConfig& cfg) {
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw std::invalid_argument("train_local: learning_rate must be non-negative and finite");
    }
    if (cfg.batch_size == 0) {
        throw std::invalid_argument("train_local: batch_size must be at least 1");
    }
    TrainResult out{start, false, {}};
    if (shard.empty()) {
        out.empty_shard = true;
        return out;
    }
    detail::require_input_width(start, shard.n_dims);

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(shard.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto& p = out.params;
    for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double weighted = 0.0;
        for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - first);
            const auto batch = shard.subset(std::span<const std::size_t>(order).subspan(first, count));
            const auto lg = loss_and_grad(p, batch);
            weighted += lg.loss * static_cast<double>(count);
            for (std::size_t l = 0; l < p.layers.size(); ++l) {
                auto& layer = p.layers[l];
                const auto& g = lg.grads.layers[l];
                for (std::size_t k = 0; k < layer.weight.size(); ++k) {
                    layer.weight[k] -= cfg.learning_rate * g.weight[k];
                }
                for (std::size_t k = 0; k < layer.bias.size(); ++k) {
                    layer.bias[k] -= cfg.learning_rate * g.bias[k];
                }
            }
        }
        out.epoch_losses.push_back(weighted / static_cast<double>(order.size()));
    }
    if (!p.all_finite()) {
        throw std::domain_error("train_local: parameters became non-finite");
    }
    return out;
}

/// Fraction of samples whose predicted class equals the label.
inline double accuracy(const ModelParams& p, const Dataset& d) {
    if (d.empty()) {
        throw std::invalid_argument("accuracy: empty dataset");
    }
    const auto pred = predict(p, d);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        hit += pred[i] == d.labels[i] ? 1 : 0;
    }
    return static_cast<double>(hit) / static_cast<double>(d.size());
}

}  // namespace fedlad::learning

#endif  // FEDLAD_LEARNING_TRAIN_HPP
