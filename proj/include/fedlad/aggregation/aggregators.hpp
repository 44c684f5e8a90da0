// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_AGGREGATION_AGGREGATORS_HPP
#define FEDLAD_AGGREGATION_AGGREGATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedlad/aggregation/flatten.hpp"
#include "fedlad/linalg/dense_matrix.hpp"
#include "fedlad/linalg/rref.hpp"
#include "fedlad/parallel/parallel_rref.hpp"

namespace fedlad::aggregation {

/// A node's flattened local model.
struct ModelUpdate {
    std::size_t node_id = 0;
    std::vector<double> params;
    LayerShapes shapes;
};

enum class AggregatorKind { fedavg, fedlad, median, trimmed_mean, krum };

inline std::string_view to_string(AggregatorKind k) {
    switch (k) {
        case AggregatorKind::fedavg: return "fedavg";
        case AggregatorKind::fedlad: return "fedlad";
        case AggregatorKind::median: return "median";
        case AggregatorKind::trimmed_mean: return "trimmed_mean";
        case AggregatorKind::krum: return "krum";
    }
    return "unknown";
}

inline std::optional<AggregatorKind> parse_aggregator(std::string_view name) {
    for (auto k : {AggregatorKind::fedavg, AggregatorKind::fedlad, AggregatorKind::median,
                   AggregatorKind::trimmed_mean, AggregatorKind::krum}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    return std::nullopt;
}

struct AggregatorConfig {
    AggregatorKind kind = AggregatorKind::fedavg;
    /// Trimmed-mean k; unset means floor(0.2 n).
    std::optional<std::size_t> trim_k;
    /// Krum f; unset means floor(0.3 n).
    std::optional<std::size_t> krum_f;
    linalg::RrefConfig rref;
    parallel::ParallelConfig parallel;

    std::size_t resolved_trim_k(std::size_t n) const { return trim_k.value_or(n / 5); }
    std::size_t resolved_krum_f(std::size_t n) const { return krum_f.value_or(3 * n / 10); }
};

struct AggregationReport {
    std::vector<double> global;
    /// Node ids in ascending order; `accepted` is indexed the same way.
    std::vector<std::size_t> node_ids;
    std::vector<bool> accepted;
    /// FedLAD pivot models in ascending node order; empty for other rules.
    std::vector<std::size_t> selected_ids;
    /// FedLAD saw an all-zero update matrix and averaged everything instead.
    bool degraded = false;
};

namespace detail {

inline void require_updates(std::span<const ModelUpdate> updates, const char* who) {
    if (updates.empty()) {
        throw std::invalid_argument(std::string(who) + ": no updates");
    }
    const std::size_t len = updates.front().params.size();
    if (len == 0) {
        throw std::invalid_argument(std::string(who) + ": empty parameter vector");
    }
    for (const auto& u : updates) {
        if (u.params.size() != len) {
            throw std::invalid_argument(std::string(who) + ": node " + std::to_string(u.node_id) +
                                        " has " + std::to_string(u.params.size()) + " parameters, expected " +
                                        std::to_string(len));
        }
    }
}

/// Sorted by node id; duplicate ids are rejected.
inline std::vector<const ModelUpdate*> in_node_order(std::span<const ModelUpdate> updates) {
    std::vector<const ModelUpdate*> out;
    out.reserve(updates.size());
    for (const auto& u : updates) {
        out.push_back(&u);
    }
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->node_id < b->node_id; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i]->node_id == out[i - 1]->node_id) {
            throw std::invalid_argument("duplicate node id " + std::to_string(out[i]->node_id));
        }
    }
    return out;
}

inline std::vector<double> mean_of(const std::vector<const ModelUpdate*>& picked) {
    std::vector<double> sum(picked.front()->params.size(), 0.0);
    for (const auto* u : picked) {
        for (std::size_t j = 0; j < sum.size(); ++j) {
            sum[j] += u->params[j];
        }
    }
    const double n = static_cast<double>(picked.size());
    for (double& x : sum) {
        x /= n;
    }
    return sum;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

}  // namespace detail

/// Uniform coordinate-wise mean, summed in node-id order.
inline std::vector<double> fedavg(std::span<const ModelUpdate> updates) {
    detail::require_updates(updates, "fedavg");
    return detail::mean_of(detail::in_node_order(updates));
}

/// Coordinate-wise median; even counts average the two middle values.
inline std::vector<double> median_agg(std::span<const ModelUpdate> updates) {
    detail::require_updates(updates, "median");
    const std::size_t n = updates.size();
    const std::size_t d = updates.front().params.size();
    std::vector<double> out(d);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = updates[i].params[j];
        }
        std::sort(column.begin(), column.end());
        out[j] = n % 2 == 1 ? column[n / 2] : (column[n / 2 - 1] + column[n / 2]) / 2.0;
    }
    return out;
}

/// Per coordinate: drop the k smallest and k largest values, average the rest.
inline std::vector<double> trimmed_mean_agg(std::span<const ModelUpdate> updates, std::size_t k) {
    detail::require_updates(updates, "trimmed_mean");
    const std::size_t n = updates.size();
    if (2 * k >= n) {
        throw std::invalid_argument("trimmed_mean: requires 2k < n (k=" + std::to_string(k) +
                                    ", n=" + std::to_string(n) + ")");
    }
    const std::size_t d = updates.front().params.size();
    std::vector<double> out(d);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = updates[i].params[j];
        }
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        for (std::size_t i = k; i < n - k; ++i) {
            sum += column[i];
        }
        out[j] = sum / static_cast<double>(n - 2 * k);
    }
    return out;
}

/*
 * Krum: score each update by the summed squared distance to its n - f - 2
 * nearest other updates and return the position (in ascending node order) of
 * the lowest score. Ties go to the lowest node id.
 */
inline std::size_t krum_select(std::span<const ModelUpdate> updates, std::size_t f) {
    detail::require_updates(updates, "krum");
    const auto ordered = detail::in_node_order(updates);
    const std::size_t n = ordered.size();
    if (n < f + 3) {
        throw std::invalid_argument("krum: requires n - f - 2 >= 1 (n=" + std::to_string(n) +
                                    ", f=" + std::to_string(f) + ")");
    }
    const std::size_t neighbours = n - f - 2;
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            dist[a * n + b] = dist[b * n + a] = detail::squared_distance(ordered[a]->params, ordered[b]->params);
        }
    }
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<double> row;
    for (std::size_t a = 0; a < n; ++a) {
        row.clear();
        for (std::size_t b = 0; b < n; ++b) {
            if (b != a) {
                row.push_back(dist[a * n + b]);
            }
        }
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours), row.end());
        const double score = std::accumulate(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours), 0.0);
        if (score < best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

inline std::vector<double> krum_agg(std::span<const ModelUpdate> updates, std::size_t f) {
    const std::size_t pick = krum_select(updates, f);
    return detail::in_node_order(updates)[pick]->params;
}

/*
 * FedLAD: stack the updates (ascending node id) as matrix rows, keep the
 * models the RREF picks as pivots and average those with equal weights.
 * Rank zero (every update is the zero vector) falls back to averaging all
 * updates and sets `degraded`.
 */
inline AggregationReport fedlad(std::span<const ModelUpdate> updates, const AggregatorConfig& cfg) {
    detail::require_updates(updates, "fedlad");
    const auto ordered = detail::in_node_order(updates);
    const std::size_t n = ordered.size();
    const std::size_t d = ordered.front()->params.size();

    linalg::DenseMatrix stacked(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(ordered[i]->params.begin(), ordered[i]->params.end(), stacked.row(i).begin());
    }
    const auto outcome = parallel::rref_parallel(stacked, cfg.rref, cfg.parallel);

    AggregationReport report;
    report.node_ids.reserve(n);
    for (const auto* u : ordered) {
        report.node_ids.push_back(u->node_id);
    }
    report.accepted.assign(n, false);
    if (outcome.rank == 0) {
        report.degraded = true;
        report.accepted.assign(n, true);
    } else {
        for (std::size_t pos : outcome.selected_rows) {
            report.accepted[pos] = true;
        }
    }
    std::vector<const ModelUpdate*> picked;
    for (std::size_t i = 0; i < n; ++i) {
        if (report.accepted[i]) {
            picked.push_back(ordered[i]);
            report.selected_ids.push_back(ordered[i]->node_id);
        }
    }
    report.global = detail::mean_of(picked);
    return report;
}

/// Dispatches on cfg.kind. Non-FedLAD rules report every node accepted except Krum,
/// which accepts only the chosen node.
inline AggregationReport aggregate(std::span<const ModelUpdate> updates, const AggregatorConfig& cfg) {
    if (cfg.kind == AggregatorKind::fedlad) {
        return fedlad(updates, cfg);
    }
    detail::require_updates(updates, to_string(cfg.kind).data());
    const auto ordered = detail::in_node_order(updates);
    AggregationReport report;
    for (const auto* u : ordered) {
        report.node_ids.push_back(u->node_id);
    }
    report.accepted.assign(ordered.size(), true);
    const std::size_t n = updates.size();
    switch (cfg.kind) {
        case AggregatorKind::fedavg: report.global = fedavg(updates); break;
        case AggregatorKind::median: report.global = median_agg(updates); break;
        case AggregatorKind::trimmed_mean:
            report.global = trimmed_mean_agg(updates, cfg.resolved_trim_k(n));
            break;
        case AggregatorKind::krum: {
            const std::size_t pick = krum_select(updates, cfg.resolved_krum_f(n));
            report.accepted.assign(n, false);
            report.accepted[pick] = true;
            report.global = ordered[pick]->params;
            break;
        }
        case AggregatorKind::fedlad: break;
    }
    return report;
}

}  // namespace fedlad::aggregation

#endif  // FEDLAD_AGGREGATION_AGGREGATORS_HPP
