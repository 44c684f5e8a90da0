// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_SIMULATION_PARTITION_HPP
#define FEDLAD_SIMULATION_PARTITION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedlad/learning/dataset.hpp"

namespace fedlad::simulation {

using learning::Dataset;

/// Label-flip attack: source and target labels are swapped in both directions.
struct AttackSpec {
    std::size_t source = 0;
    std::size_t target = 1;

    void validate(std::size_t n_classes) const {
        if (source == target) {
            throw std::invalid_argument("attack: source and target labels must differ");
        }
        if (source >= n_classes || target >= n_classes) {
            throw std::invalid_argument("attack: labels must be below n_classes (" + std::to_string(n_classes) + ")");
        }
    }
};

inline Dataset flip_labels(const Dataset& shard, const AttackSpec& attack) {
    Dataset out = shard;
    for (auto& l : out.labels) {
        if (l == attack.source) {
            l = attack.target;
        } else if (l == attack.target) {
            l = attack.source;
        }
    }
    return out;
}

/*
 * Sample indices per node. For each class the samples (in dataset order) are
 * shuffled, Dirichlet(alpha) proportions are drawn for the nodes, and the
 * class is cut into consecutive runs sized by largest-remainder rounding
 * (remainder ties go to the lower node index). Each node's list is ascending.
 */
inline std::vector<std::vector<std::size_t>> partition_dirichlet_indices(const Dataset& data, std::size_t n_nodes,
                                                                         double alpha, std::uint64_t seed) {
    if (n_nodes == 0) {
        throw std::invalid_argument("partition_dirichlet: n_nodes must be positive");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("partition_dirichlet: alpha must be positive and finite");
    }
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<std::vector<std::size_t>> shards(n_nodes);

    for (std::size_t c = 0; c < data.n_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data.labels[i] == c) {
                members.push_back(i);
            }
        }
        std::shuffle(members.begin(), members.end(), rng);

        std::vector<double> share(n_nodes);
        double total = 0.0;
        for (double& s : share) {
            s = gamma(rng);
            total += s;
        }
        if (!(total > 0.0) || !std::isfinite(total)) {
            // Every draw underflowed; give the class to one node.
            std::fill(share.begin(), share.end(), 0.0);
            share[std::uniform_int_distribution<std::size_t>(0, n_nodes - 1)(rng)] = 1.0;
            total = 1.0;
        }

        const double n_c = static_cast<double>(members.size());
        std::vector<std::size_t> count(n_nodes);
        std::vector<double> remainder(n_nodes);
        std::size_t assigned = 0;
        for (std::size_t k = 0; k < n_nodes; ++k) {
            const double quota = n_c * share[k] / total;
            count[k] = static_cast<std::size_t>(std::floor(quota));
            remainder[k] = quota - std::floor(quota);
            assigned += count[k];
        }
        std::vector<std::size_t> order(n_nodes);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
        for (std::size_t k = 0; assigned < members.size(); k = (k + 1) % n_nodes) {
            ++count[order[k]];
            ++assigned;
        }

        std::size_t pos = 0;
        for (std::size_t k = 0; k < n_nodes; ++k) {
            shards[k].insert(shards[k].end(), members.begin() + static_cast<std::ptrdiff_t>(pos),
                             members.begin() + static_cast<std::ptrdiff_t>(pos + count[k]));
            pos += count[k];
        }
    }
    for (auto& s : shards) {
        std::sort(s.begin(), s.end());
    }
    return shards;
}

/// Non-IID split of `data` into n_nodes shards; shards may be empty.
inline std::vector<Dataset> partition_dirichlet(const Dataset& data, std::size_t n_nodes, double alpha,
                                                std::uint64_t seed) {
    std::vector<Dataset> out;
    for (const auto& idx : partition_dirichlet_indices(data, n_nodes, alpha, seed)) {
        out.push_back(data.subset(idx));
    }
    return out;
}

/// Number of malicious nodes: n * ratio rounded half up.
inline std::size_t malicious_count(std::size_t n_nodes, double ratio) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
        throw std::invalid_argument("malicious ratio must lie in [0, 1]");
    }
    // The small nudge keeps products like 10 * 0.15 = 1.4999999999999998 on the intended side.
    const double scaled = static_cast<double>(n_nodes) * ratio;
    return std::min(n_nodes, static_cast<std::size_t>(std::floor(scaled + 0.5 + 1e-9)));
}

/// Uniformly random malicious node ids, ascending.
inline std::vector<std::size_t> select_malicious(std::size_t n_nodes, double ratio, std::uint64_t seed) {
    const std::size_t k = malicious_count(n_nodes, ratio);
    std::vector<std::size_t> ids(n_nodes);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace fedlad::simulation

#endif  // FEDLAD_SIMULATION_PARTITION_HPP
