// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_PARALLEL_PARALLEL_RREF_HPP
#define FEDLAD_PARALLEL_PARALLEL_RREF_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedlad/linalg/dense_matrix.hpp"
#include "fedlad/linalg/rref.hpp"
#include "fedlad/parallel/thread_pool.hpp"

namespace fedlad::parallel {

using linalg::DenseMatrix;
using linalg::RrefConfig;
using linalg::RrefOutcome;

enum class SplitAxis { rows, columns };

struct ParallelConfig {
    std::size_t workers = 1;
    /// Recursion stops once a combined block has at most this many rows.
    /// Unset means max(workers, 16).
    std::optional<std::size_t> smallest_block;
    /// `columns` is experimental: it may lose rank and falls back to a full pass when it does.
    SplitAxis split_axis = SplitAxis::rows;

    std::size_t resolved_smallest_block() const {
        return smallest_block.value_or(std::max<std::size_t>(workers, 16));
    }
};

/// A sub-matrix together with the root-matrix row index of each of its rows.
struct IndexedBlock {
    DenseMatrix block;
    std::vector<std::size_t> origin;

    static IndexedBlock root(DenseMatrix m) {
        std::vector<std::size_t> origin(m.rows());
        std::iota(origin.begin(), origin.end(), std::size_t{0});
        return {std::move(m), std::move(origin)};
    }
};

/*
 * Partitions `m` into `parts` consecutive blocks along `axis`. Every block gets
 * extent / parts lines and the last one also takes the remainder. `parts` is
 * clamped to the extent so no block is empty.
 */
inline std::vector<IndexedBlock> split(const IndexedBlock& m, std::size_t parts, SplitAxis axis) {
    if (parts == 0) {
        throw std::invalid_argument("split: parts must be at least 1");
    }
    const std::size_t extent = axis == SplitAxis::rows ? m.block.rows() : m.block.cols();
    parts = std::min(parts, extent);
    const std::size_t base = extent / parts;

    std::vector<IndexedBlock> out;
    out.reserve(parts);
    for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t begin = p * base;
        const std::size_t end = p + 1 == parts ? extent : begin + base;
        std::vector<std::size_t> idx(end - begin);
        std::iota(idx.begin(), idx.end(), begin);
        if (axis == SplitAxis::rows) {
            std::vector<std::size_t> origin(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                origin[i] = m.origin[idx[i]];
            }
            out.push_back({m.block.select_rows(idx), std::move(origin)});
        } else {
            out.push_back({m.block.select_cols(idx), m.origin});
        }
    }
    return out;
}

/*
 * Stacks the non-zero (pivot-position) rows of each reduced block, in block
 * order. Each kept row is tagged with the root row index of the model selected
 * at that pivot position. All-zero rows are dropped; nullopt means every block
 * was zero.
 *
 * If `target_scale` is given, each kept row is multiplied by a power of two so
 * its largest entry lies in [target_scale / 2, target_scale). That keeps pivot
 * thresholds meaningful across recursion levels without touching rank or
 * pivot columns.
 */
inline std::optional<IndexedBlock> combine_nonzero(std::span<const IndexedBlock> blocks,
                                                   std::span<const RrefOutcome> outcomes,
                                                   std::optional<double> target_scale = std::nullopt) {
    if (blocks.size() != outcomes.size()) {
        throw std::invalid_argument("combine_nonzero: one outcome per block is required");
    }
    std::size_t total = 0;
    for (const auto& o : outcomes) {
        total += o.rank;
    }
    if (total == 0) {
        return std::nullopt;
    }
    const std::size_t cols = outcomes.front().reduced.cols();
    DenseMatrix stacked(total, cols);
    std::vector<std::size_t> origin;
    origin.reserve(total);
    std::size_t out_row = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& o = outcomes[b];
        if (o.rank > 0 && o.reduced.cols() != cols) {
            throw std::invalid_argument("combine_nonzero: blocks differ in width");
        }
        for (std::size_t k = 0; k < o.rank; ++k) {
            auto src = o.reduced.row(k);
            auto dst = stacked.row(out_row);
            std::copy(src.begin(), src.end(), dst.begin());
            if (target_scale) {
                double peak = 0.0;
                for (double x : dst) {
                    peak = std::max(peak, std::abs(x));
                }
                if (peak > 0.0) {
                    int peak_exp = 0;
                    int target_exp = 0;
                    std::frexp(peak, &peak_exp);
                    std::frexp(*target_scale, &target_exp);
                    const double factor = std::ldexp(1.0, target_exp - peak_exp);
                    for (double& x : dst) {
                        x *= factor;
                    }
                }
            }
            origin.push_back(blocks[b].origin[o.selected_rows[k]]);
            ++out_row;
        }
    }
    return IndexedBlock{std::move(stacked), std::move(origin)};
}

/// What the block recursion did; filled only when requested.
struct RecursionTrace {
    struct Level {
        std::size_t input_rows = 0;
        std::size_t blocks = 0;
        std::optional<IndexedBlock> combined;
    };
    std::vector<Level> levels;
    /// True when model identity had to be recovered by a full elimination pass.
    bool full_pass_fallback = false;
};

namespace detail {

inline RrefOutcome zero_outcome(const DenseMatrix& m) {
    RrefOutcome out;
    out.permutation.resize(m.rows());
    std::iota(out.permutation.begin(), out.permutation.end(), std::size_t{0});
    out.reduced = DenseMatrix(m.rows(), m.cols());
    return out;
}

inline void validate(const ParallelConfig& pcfg) {
    if (pcfg.workers == 0) {
        throw std::invalid_argument("ParallelConfig: workers must be at least 1");
    }
    if (pcfg.smallest_block && *pcfg.smallest_block == 0) {
        throw std::invalid_argument("ParallelConfig: smallest_block must be at least 1");
    }
}

// Largest magnitude, or nullopt if any entry is NaN or Inf. One pooled read.
inline std::optional<double> pooled_max_abs(const DenseMatrix& m, ThreadPool& pool) {
    const auto data = m.data();
    const std::size_t chunks = std::min(pool.concurrency(), data.size());
    std::vector<double> peaks(chunks, 0.0);
    std::vector<char> finite(chunks, 1);
    pool.run(chunks, [&](std::size_t chunk) {
        const std::size_t begin = data.size() * chunk / chunks;
        const std::size_t end = data.size() * (chunk + 1) / chunks;
        double peak = 0.0;
        bool ok = true;
        for (std::size_t i = begin; i < end; ++i) {
            const double a = std::abs(data[i]);
            ok = ok && a <= std::numeric_limits<double>::max();
            peak = std::max(peak, a);
        }
        peaks[chunk] = peak;
        finite[chunk] = ok ? 1 : 0;
    });
    if (std::find(finite.begin(), finite.end(), 0) != finite.end()) {
        return std::nullopt;
    }
    return *std::max_element(peaks.begin(), peaks.end());
}

}  // namespace detail

/*
 * Parallel RREF.
 *
 * Phase one is the block recursion: split the rows across workers, reduce every
 * block concurrently, stack the surviving non-zero rows and repeat until the
 * stack is small (or stops shrinking). The final stack is reduced with the
 * cross-cancel work split over disjoint column ranges. Its pivot columns and
 * rank are those of the input, because the stack spans the same row space.
 *
 * Phase two recovers model identity. Which original row wins each pivot depends
 * on the original rows, not on their reduced combinations, so the pivoted
 * elimination is replayed on the original matrix restricted to the pivot
 * columns. Each column evolves independently in the elimination kernel, so this
 * replay performs bit-for-bit the same pivot decisions as rref_serial on the
 * whole matrix while touching only rows x rank entries.
 *
 * An input with no more rows than the smallest block skips both phases and is
 * reduced directly with column-split cancellation.
 */
inline RrefOutcome rref_parallel(const DenseMatrix& m, const RrefConfig& cfg,
                                 const ParallelConfig& pcfg, RecursionTrace* trace = nullptr) {
    detail::validate(pcfg);
    if (pcfg.workers == 1) {
        return linalg::rref_serial(m, cfg);
    }

    ThreadPool pool(pcfg.workers);
    const auto peak = detail::pooled_max_abs(m, pool);
    if (!peak) {
        linalg::require_finite(m);
    }
    const double root_scale = std::max(1.0, *peak);
    const double epsilon = cfg.epsilon ? linalg::resolve_epsilon(m, cfg)
                                       : linalg::kDefaultRelativeEpsilon * root_scale;
    const std::size_t smallest = pcfg.resolved_smallest_block();
    if (m.rows() <= smallest) {
        return linalg::detail::rref_with(m, cfg, epsilon, pool);
    }
    RrefConfig inner = cfg;
    inner.normalize_pivot_row = false;

    linalg::InlineExecutor inline_exec;

    IndexedBlock current = IndexedBlock::root(m);
    for (;;) {
        auto blocks = split(current, pcfg.workers, pcfg.split_axis);
        std::vector<RrefOutcome> outcomes(blocks.size());
        pool.run(blocks.size(), [&](std::size_t i) {
            linalg::InlineExecutor local;
            outcomes[i] = linalg::detail::rref_with(blocks[i].block, inner, epsilon, local);
        });

        std::optional<IndexedBlock> combined;
        if (pcfg.split_axis == SplitAxis::rows) {
            combined = combine_nonzero(blocks, outcomes, root_scale);
        } else {
            // Union of the original rows selected in any column block.
            std::vector<std::size_t> keep;
            for (const auto& o : outcomes) {
                keep.insert(keep.end(), o.selected_rows.begin(), o.selected_rows.end());
            }
            std::sort(keep.begin(), keep.end());
            keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
            if (!keep.empty()) {
                std::vector<std::size_t> origin(keep.size());
                for (std::size_t i = 0; i < keep.size(); ++i) {
                    origin[i] = current.origin[keep[i]];
                }
                combined = IndexedBlock{current.block.select_rows(keep), std::move(origin)};
            }
        }

        if (trace) {
            trace->levels.push_back({current.block.rows(), blocks.size(), combined});
        }
        if (!combined) {
            return detail::zero_outcome(m);
        }
        const bool shrank = combined->block.rows() < current.block.rows();
        current = std::move(*combined);
        if (pcfg.split_axis == SplitAxis::columns || !shrank || current.block.rows() <= smallest) {
            break;
        }
    }

    const RrefOutcome basis = linalg::detail::rref_with(current.block, inner, epsilon, pool);
    const auto& pivots = basis.pivot_cols;

    DenseMatrix restricted = pivots.empty() ? DenseMatrix(m.rows(), 1) : m.select_cols(pivots);
    auto replay = linalg::detail::eliminate(restricted, epsilon, cfg.tie_tolerance, inline_exec);
    bool consistent = replay.pivot_cols.size() == pivots.size();
    for (std::size_t k = 0; consistent && k < replay.pivot_cols.size(); ++k) {
        consistent = replay.pivot_cols[k] == k;
    }
    if (!consistent) {
        if (trace) {
            trace->full_pass_fallback = true;
        }
        return linalg::detail::rref_with(m, cfg, epsilon, pool);
    }

    RrefOutcome out;
    out.rank = pivots.size();
    out.pivot_cols = pivots;
    out.selected_rows = std::move(replay.selected_rows);
    out.permutation = std::move(replay.permutation);
    out.reduced = DenseMatrix(m.rows(), m.cols());
    for (std::size_t k = 0; k < out.rank; ++k) {
        auto src = basis.reduced.row(k);
        auto dst = out.reduced.row(k);
        const double p = cfg.normalize_pivot_row ? src[pivots[k]] : 1.0;
        for (std::size_t j = 0; j < src.size(); ++j) {
            dst[j] = src[j] / p;
        }
    }
    return out;
}

}  // namespace fedlad::parallel

#endif  // FEDLAD_PARALLEL_PARALLEL_RREF_HPP
