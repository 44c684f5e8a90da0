// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_AGGREGATION_FLATTEN_HPP
#define FEDLAD_AGGREGATION_FLATTEN_HPP

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedlad::aggregation {

struct LayerShape {
    std::string name;
    std::vector<std::size_t> dims;

    std::size_t size() const {
        return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
    }
    bool operator==(const LayerShape&) const = default;
};

/// Layer order is fixed for a run and shared by all nodes.
using LayerShapes = std::vector<LayerShape>;

inline std::size_t total_size(const LayerShapes& shapes) {
    std::size_t n = 0;
    for (const auto& s : shapes) {
        n += s.size();
    }
    if (n == 0) {
        throw std::invalid_argument("LayerShapes: total element count must be positive");
    }
    return n;
}

/// One layer's values, stored row-major.
struct NamedArray {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<double> values;

    bool operator==(const NamedArray&) const = default;
};

/// Concatenates layers in `shapes` order; each layer contributes its row-major elements.
inline std::vector<double> flatten(std::span<const NamedArray> layers, const LayerShapes& shapes) {
    if (layers.size() != shapes.size()) {
        throw std::invalid_argument("flatten: expected " + std::to_string(shapes.size()) + " layers, got " +
                                    std::to_string(layers.size()));
    }
    std::vector<double> out;
    out.reserve(total_size(shapes));
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        const auto& shape = shapes[i];
        if (layer.name != shape.name || layer.dims != shape.dims || layer.values.size() != shape.size()) {
            throw std::invalid_argument("flatten: layer " + std::to_string(i) + " ('" + layer.name +
                                        "') does not match shape '" + shape.name + "'");
        }
        out.insert(out.end(), layer.values.begin(), layer.values.end());
    }
    return out;
}

inline std::vector<NamedArray> unflatten(std::span<const double> v, const LayerShapes& shapes) {
    if (v.size() != total_size(shapes)) {
        throw std::invalid_argument("unflatten: vector length " + std::to_string(v.size()) +
                                    " does not match shapes (" + std::to_string(total_size(shapes)) + ")");
    }
    std::vector<NamedArray> out;
    out.reserve(shapes.size());
    std::size_t offset = 0;
    for (const auto& shape : shapes) {
        const std::size_t n = shape.size();
        out.push_back({shape.name, shape.dims, std::vector<double>(v.begin() + offset, v.begin() + offset + n)});
        offset += n;
    }
    return out;
}

}  // namespace fedlad::aggregation

#endif  // FEDLAD_AGGREGATION_FLATTEN_HPP
