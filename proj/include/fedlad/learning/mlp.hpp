// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_LEARNING_MLP_HPP
#define FEDLAD_LEARNING_MLP_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedlad/learning/dataset.hpp"

namespace fedlad::learning {

enum class Activation { relu, tanh };

inline std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

inline std::optional<Activation> parse_activation(std::string_view s) {
    if (s == "relu") {
        return Activation::relu;
    }
    if (s == "tanh") {
        return Activation::tanh;
    }
    return std::nullopt;
}

struct MlpSpec {
    /// Input width, hidden widths..., class count.
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::relu;

    static MlpSpec with_hidden(std::size_t n_inputs, std::vector<std::size_t> hidden, std::size_t n_classes,
                               Activation act = Activation::relu) {
        MlpSpec s;
        s.layer_sizes.push_back(n_inputs);
        s.layer_sizes.insert(s.layer_sizes.end(), hidden.begin(), hidden.end());
        s.layer_sizes.push_back(n_classes);
        s.activation = act;
        return s;
    }

    void validate() const {
        if (layer_sizes.size() < 2) {
            throw std::invalid_argument("MlpSpec: need at least an input and an output layer");
        }
        for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
            if (layer_sizes[i] == 0) {
                throw std::invalid_argument("MlpSpec: layer " + std::to_string(i) + " has zero width");
            }
        }
        if (layer_sizes.back() < 2) {
            throw std::invalid_argument("MlpSpec: output layer needs at least 2 classes");
        }
    }
};

/// Fully connected layer; weight is out x in, row-major.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;
    std::vector<double> bias;

    bool operator==(const DenseLayer&) const = default;
};

struct ModelParams {
    Activation activation = Activation::relu;
    std::vector<DenseLayer> layers;

    std::size_t n_inputs() const { return layers.front().in; }
    std::size_t n_outputs() const { return layers.back().out; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) {
            n += l.weight.size() + l.bias.size();
        }
        return n;
    }

    bool all_finite() const {
        for (const auto& l : layers) {
            for (double x : l.weight) {
                if (!std::isfinite(x)) {
                    return false;
                }
            }
            for (double x : l.bias) {
                if (!std::isfinite(x)) {
                    return false;
                }
            }
        }
        return true;
    }

    /// Same shape, every entry zero.
    ModelParams zeros_like() const {
        ModelParams z = *this;
        for (auto& l : z.layers) {
            std::fill(l.weight.begin(), l.weight.end(), 0.0);
            std::fill(l.bias.begin(), l.bias.end(), 0.0);
        }
        return z;
    }

    bool operator==(const ModelParams&) const = default;
};

/// Glorot-uniform weights, zero biases.
inline ModelParams init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    ModelParams p;
    p.activation = spec.activation;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        DenseLayer layer;
        layer.in = spec.layer_sizes[l];
        layer.out = spec.layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        std::uniform_real_distribution<double> u(-limit, limit);
        layer.weight.resize(layer.in * layer.out);
        for (double& w : layer.weight) {
            w = u(rng);
        }
        layer.bias.assign(layer.out, 0.0);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

namespace detail {

inline double activate(Activation a, double z) { return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z); }

/// Derivative expressed through the pre-activation z and output y.
inline double activate_grad(Activation a, double z, double y) {
    return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

/// Forward pass for one sample. zs[l] and ys[l] hold layer l's pre- and post-activation.
inline void forward(const ModelParams& p, std::span<const double> x, std::vector<std::vector<double>>& zs,
                    std::vector<std::vector<double>>& ys) {
    const std::size_t depth = p.layers.size();
    zs.resize(depth);
    ys.resize(depth);
    std::span<const double> prev = x;
    for (std::size_t l = 0; l < depth; ++l) {
        const auto& layer = p.layers[l];
        auto& z = zs[l];
        auto& y = ys[l];
        z.assign(layer.out, 0.0);
        y.resize(layer.out);
        for (std::size_t o = 0; o < layer.out; ++o) {
            double s = layer.bias[o];
            const double* w = layer.weight.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) {
                s += w[i] * prev[i];
            }
            z[o] = s;
            y[o] = l + 1 == depth ? s : activate(p.activation, s);
        }
        prev = y;
    }
}

inline void require_input_width(const ModelParams& p, std::size_t n_dims) {
    if (p.layers.empty()) {
        throw std::invalid_argument("model has no layers");
    }
    if (n_dims != p.n_inputs()) {
        throw std::invalid_argument("feature dimension " + std::to_string(n_dims) + " does not match model input " +
                                    std::to_string(p.n_inputs()));
    }
}

}  // namespace detail

struct LossAndGrad {
    double loss = 0.0;
    ModelParams grads;
};

/*
 * Mean softmax cross-entropy over the batch and its exact gradient. The last
 * layer is linear; softmax is folded into the loss via log-sum-exp.
 * Throws std::domain_error if any logit or the loss is non-finite.
 */
inline LossAndGrad loss_and_grad(const ModelParams& p, const Dataset& batch) {
    detail::require_input_width(p, batch.n_dims);
    if (batch.empty()) {
        throw std::invalid_argument("loss_and_grad: empty batch");
    }
    if (batch.n_classes > p.n_outputs()) {
        throw std::invalid_argument("loss_and_grad: dataset has more classes than model outputs");
    }
    const std::size_t depth = p.layers.size();
    LossAndGrad out{0.0, p.zeros_like()};
    std::vector<std::vector<double>> zs, ys;
    std::vector<double> delta, prev_delta;

    for (std::size_t s = 0; s < batch.size(); ++s) {
        const auto x = batch.sample(s);
        detail::forward(p, x, zs, ys);
        const auto& logits = zs.back();
        const double top = *std::max_element(logits.begin(), logits.end());
        if (!std::isfinite(top)) {
            throw std::domain_error("loss_and_grad: non-finite logits for batch sample " + std::to_string(s));
        }
        double sum = 0.0;
        for (double z : logits) {
            sum += std::exp(z - top);
        }
        const double lse = top + std::log(sum);
        const std::size_t y = batch.labels[s];
        out.loss += lse - logits[y];

        delta.resize(logits.size());
        for (std::size_t o = 0; o < logits.size(); ++o) {
            delta[o] = std::exp(logits[o] - lse) - (o == y ? 1.0 : 0.0);
        }
        for (std::size_t l = depth; l-- > 0;) {
            const auto& layer = p.layers[l];
            auto& g = out.grads.layers[l];
            const std::span<const double> input = l == 0 ? x : std::span<const double>(ys[l - 1]);
            for (std::size_t o = 0; o < layer.out; ++o) {
                g.bias[o] += delta[o];
                double* gw = g.weight.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) {
                    gw[i] += delta[o] * input[i];
                }
            }
            if (l == 0) {
                break;
            }
            prev_delta.assign(layer.in, 0.0);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double* w = layer.weight.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) {
                    prev_delta[i] += w[i] * delta[o];
                }
            }
            for (std::size_t i = 0; i < layer.in; ++i) {
                prev_delta[i] *= detail::activate_grad(p.activation, zs[l - 1][i], ys[l - 1][i]);
            }
            delta.swap(prev_delta);
        }
    }

    const double n = static_cast<double>(batch.size());
    out.loss /= n;
    if (!std::isfinite(out.loss)) {
        throw std::domain_error("loss_and_grad: non-finite loss");
    }
    for (auto& g : out.grads.layers) {
        for (double& v : g.weight) {
            v /= n;
        }
        for (double& v : g.bias) {
            v /= n;
        }
    }
    return out;
}

/// Raw output-layer values, one row of n_outputs per sample.
inline std::vector<double> logits(const ModelParams& p, std::span<const double> features, std::size_t n_dims) {
    detail::require_input_width(p, n_dims);
    if (features.size() % n_dims != 0) {
        throw std::invalid_argument("feature buffer length is not a multiple of the dimension");
    }
    const std::size_t n = features.size() / n_dims;
    std::vector<double> out;
    out.reserve(n * p.n_outputs());
    std::vector<std::vector<double>> zs, ys;
    for (std::size_t s = 0; s < n; ++s) {
        detail::forward(p, features.subspan(s * n_dims, n_dims), zs, ys);
        out.insert(out.end(), zs.back().begin(), zs.back().end());
    }
    return out;
}

/// Argmax class per sample; ties go to the lowest class index.
inline std::vector<std::size_t> predict(const ModelParams& p, std::span<const double> features, std::size_t n_dims) {
    const auto z = logits(p, features, n_dims);
    const std::size_t k = p.n_outputs();
    std::vector<std::size_t> out(z.size() / k);
    for (std::size_t s = 0; s < out.size(); ++s) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
            if (z[s * k + c] > z[s * k + best]) {
                best = c;
            }
        }
        out[s] = best;
    }
    return out;
}

inline std::vector<std::size_t> predict(const ModelParams& p, const Dataset& d) {
    return predict(p, d.features, d.n_dims);
}

}  // namespace fedlad::learning

#endif  // FEDLAD_LEARNING_MLP_HPP
