// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_TESTS_GRADIENT_CHECK_HPP
#define FEDLAD_TESTS_GRADIENT_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "fedlad/learning/mlp.hpp"

namespace fedlad::testing {

/// |a - b| / max(|a|, |b|), zero when both are zero.
inline double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/*
 * Largest relative error between backprop and central differences (step 1e-5)
 * over `draws` random 2-16-2 models, each on 8 random samples. Entries whose
 * gradient is below 1e-9 in both estimates are compared in absolute terms.
 *
 * Central differences are meaningless across a ReLU kink, so a draw whose
 * hidden pre-activations come within probe reach of zero is redrawn; the
 * number of such redraws is written to `redrawn` when given.
 */
inline double max_gradient_error(std::uint64_t seed, int draws,
                                 learning::Activation act = learning::Activation::relu, int* redrawn = nullptr) {
    using namespace fedlad::learning;
    constexpr double step = 1e-5;
    double worst = 0.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> label(0, 1);
    if (redrawn != nullptr) {
        *redrawn = 0;
    }
    for (int d = 0; d < draws; ++d) {
        auto p = init_params(MlpSpec::with_hidden(2, {16}, 2, act), rng());
        for (auto& layer : p.layers) {
            for (double& b : layer.bias) {
                b = 0.1 * g(rng);
            }
        }
        Dataset batch{2, 2, {}, {}};
        for (int s = 0; s < 8; ++s) {
            batch.features.push_back(g(rng));
            batch.features.push_back(g(rng));
            batch.labels.push_back(label(rng));
        }
        if (act == learning::Activation::relu) {
            double margin = std::numeric_limits<double>::infinity();
            double reach = 1.0;
            std::vector<std::vector<double>> zs, ys;
            for (std::size_t s = 0; s < batch.size(); ++s) {
                for (double x : batch.sample(s)) {
                    reach = std::max(reach, std::abs(x));
                }
                learning::detail::forward(p, batch.sample(s), zs, ys);
                for (double z : zs.front()) {
                    margin = std::min(margin, std::abs(z));
                }
            }
            if (margin <= 2.0 * step * reach) {
                if (redrawn != nullptr) {
                    ++*redrawn;
                }
                --d;
                continue;
            }
        }
        const auto analytic = loss_and_grad(p, batch).grads;

        auto probe = [&](double& slot, double expected) {
            const double saved = slot;
            slot = saved + step;
            const double up = loss_and_grad(p, batch).loss;
            slot = saved - step;
            const double down = loss_and_grad(p, batch).loss;
            slot = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double err = std::max(std::abs(numeric), std::abs(expected)) < 1e-9
                                   ? std::abs(numeric - expected)
                                   : relative_error(numeric, expected);
            worst = std::max(worst, err);
        };
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            for (std::size_t k = 0; k < p.layers[l].weight.size(); ++k) {
                probe(p.layers[l].weight[k], analytic.layers[l].weight[k]);
            }
            for (std::size_t k = 0; k < p.layers[l].bias.size(); ++k) {
                probe(p.layers[l].bias[k], analytic.layers[l].bias[k]);
            }
        }
    }
    return worst;
}

}  // namespace fedlad::testing

#endif  // FEDLAD_TESTS_GRADIENT_CHECK_HPP
