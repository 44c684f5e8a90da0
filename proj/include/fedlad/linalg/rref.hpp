// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_LINALG_RREF_HPP
#define FEDLAD_LINALG_RREF_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedlad/linalg/dense_matrix.hpp"

namespace fedlad::linalg {

struct RrefConfig {
    /// Absolute pivot threshold. Unset means 1e-10 * max(1, max |entry|).
    /// Zero gives the plain "non-zero" pivot test.
    std::optional<double> epsilon;
    /// Divide each pivot row by its pivot after elimination. Only `reduced` changes.
    bool normalize_pivot_row = false;
    /// Candidates within this relative distance of the column maximum count as tied.
    double tie_tolerance = 1e-9;
};

struct RrefOutcome {
    std::size_t rank = 0;
    std::vector<std::size_t> pivot_cols;
    /// Original index of the row swapped into each pivot position.
    std::vector<std::size_t> selected_rows;
    /// permutation[position] = original row index after all swaps.
    std::vector<std::size_t> permutation;
    DenseMatrix reduced{1, 1};
};

inline constexpr double kDefaultRelativeEpsilon = 1e-10;

/// Resolves the pivot threshold used for `m`.
inline double resolve_epsilon(const DenseMatrix& m, const RrefConfig& cfg) {
    if (cfg.epsilon) {
        if (!std::isfinite(*cfg.epsilon) || *cfg.epsilon < 0.0) {
            throw std::invalid_argument("RrefConfig: epsilon must be finite and non-negative");
        }
        return *cfg.epsilon;
    }
    return kDefaultRelativeEpsilon * std::max(1.0, m.max_abs());
}

/*
 * Multiply-based cancellation kernel: returns v * rows - rows[:, col] (x) pivot_row.
 * Every returned row has an exact zero in `col` because v * r[col] and r[col] * v
 * round identically.
 */
inline DenseMatrix cross_cancel(double v, std::span<const double> pivot_row, const DenseMatrix& rows,
                                std::size_t col) {
    if (pivot_row.size() != rows.cols() || col >= rows.cols()) {
        throw std::invalid_argument("cross_cancel: dimension mismatch");
    }
    DenseMatrix out(rows.rows(), rows.cols());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        const double factor = rows(r, col);
        for (std::size_t j = 0; j < rows.cols(); ++j) {
            out(r, j) = v * rows(r, j) - factor * pivot_row[j];
        }
    }
    return out;
}

/// Runs chunked work inline. Anything with the same two members can replace it.
struct InlineExecutor {
    std::size_t concurrency() const noexcept { return 1; }
    template <typename F>
    void run(std::size_t chunks, F&& fn) {
        for (std::size_t i = 0; i < chunks; ++i) {
            fn(i);
        }
    }
};

namespace detail {

// Below this many entries per step, column chunking is not worth a dispatch.
inline constexpr std::size_t kMinParallelEntries = std::size_t{1} << 16;

inline std::size_t column_chunks(std::size_t rows, std::size_t cols, std::size_t concurrency) {
    return (concurrency > 1 && rows * cols >= kMinParallelEntries) ? std::min(concurrency, cols) : 1;
}

struct EliminationResult {
    std::vector<std::size_t> pivot_cols;
    std::vector<std::size_t> selected_rows;
    std::vector<std::size_t> permutation;
};

/*
 * In-place pivoted elimination over `w`.
 *
 * After each pivot step all non-pivot rows are scaled by 2^-e, where e is the
 * binary exponent of the pivot value. The scaling is exact, uniform across the
 * candidate rows, and depends only on data in the pivot column, so argmax
 * decisions are unchanged and each column's values evolve independently of
 * every other column. The pivot threshold is carried through the same scaling
 * so it keeps meaning "entry of the classically eliminated matrix".
 */
template <typename Executor>
EliminationResult eliminate(DenseMatrix& w, double epsilon, double tie_tolerance, Executor& exec) {
    const std::size_t rows = w.rows();
    const std::size_t cols = w.cols();
    EliminationResult res;
    res.permutation.resize(rows);
    std::iota(res.permutation.begin(), res.permutation.end(), std::size_t{0});

    // Uniform factor carried by all candidate rows, as mantissa * 2^exponent.
    double carried_mant = 1.0;
    int carried_exp = 0;

    std::vector<double> factors(rows);
    std::size_t pos = 0;
    for (std::size_t col = 0; col < cols && pos < rows; ++col) {
        double best_abs = 0.0;
        for (std::size_t r = pos; r < rows; ++r) {
            best_abs = std::max(best_abs, std::abs(w(r, col)));
        }
        const double threshold = std::ldexp(epsilon * std::abs(carried_mant), carried_exp);
        if (!(best_abs > threshold)) {
            continue;
        }
        const double floor_abs = best_abs * (1.0 - tie_tolerance);
        std::size_t pick = rows;
        for (std::size_t r = pos; r < rows; ++r) {
            if (std::abs(w(r, col)) >= floor_abs &&
                (pick == rows || res.permutation[r] < res.permutation[pick])) {
                pick = r;
            }
        }
        w.swap_rows(pos, pick);
        std::swap(res.permutation[pos], res.permutation[pick]);
        res.pivot_cols.push_back(col);
        res.selected_rows.push_back(res.permutation[pos]);

        const double v = w(pos, col);
        int v_exp = 0;
        const double v_mant = std::frexp(v, &v_exp);
        const double scale = std::ldexp(1.0, -v_exp);
        for (std::size_t r = 0; r < rows; ++r) {
            factors[r] = w(r, col);
        }

        const std::size_t chunks = column_chunks(rows, cols, exec.concurrency());
        const auto pivot = w.row(pos);
        exec.run(chunks, [&](std::size_t chunk) {
            const std::size_t begin = cols * chunk / chunks;
            const std::size_t end = cols * (chunk + 1) / chunks;
            for (std::size_t r = 0; r < rows; ++r) {
                if (r == pos) {
                    continue;
                }
                const double f = factors[r];
                double* out = w.row(r).data();
                const double* p = pivot.data();
                for (std::size_t j = begin; j < end; ++j) {
                    out[j] = (v * out[j] - f * p[j]) * scale;
                }
            }
        });

        int m_exp = 0;
        carried_mant = std::frexp(carried_mant * v_mant, &m_exp);
        carried_exp += m_exp;
        ++pos;
    }
    return res;
}

// Working copy written by the same column chunks that later eliminate on it.
template <typename Executor>
DenseMatrix chunked_copy(const DenseMatrix& m, Executor& exec) {
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    const std::size_t chunks = column_chunks(rows, cols, exec.concurrency());
    if (chunks == 1) {
        return m;
    }
    DenseMatrix w = DenseMatrix::uninitialized(rows, cols);
    exec.run(chunks, [&](std::size_t chunk) {
        const std::size_t begin = cols * chunk / chunks;
        const std::size_t end = cols * (chunk + 1) / chunks;
        for (std::size_t r = 0; r < rows; ++r) {
            const auto src = m.row(r);
            std::copy(src.begin() + begin, src.begin() + end, w.row(r).begin() + begin);
        }
    });
    return w;
}

template <typename Executor>
RrefOutcome rref_with(const DenseMatrix& m, const RrefConfig& cfg, double epsilon, Executor& exec) {
    DenseMatrix w = chunked_copy(m, exec);
    auto res = eliminate(w, epsilon, cfg.tie_tolerance, exec);
    if (cfg.normalize_pivot_row) {
        for (std::size_t i = 0; i < res.pivot_cols.size(); ++i) {
            const double p = w(i, res.pivot_cols[i]);
            for (double& x : w.row(i)) {
                x /= p;
            }
        }
    }
    RrefOutcome out;
    out.rank = res.pivot_cols.size();
    out.pivot_cols = std::move(res.pivot_cols);
    out.selected_rows = std::move(res.selected_rows);
    out.permutation = std::move(res.permutation);
    out.reduced = std::move(w);
    return out;
}

}  // namespace detail

/*
 * Serial RREF with partial pivoting.
 *
 * Columns are scanned left to right. Within a column the remaining row with
 * the largest absolute entry becomes the pivot (ties go to the lowest original
 * row index); a column whose remaining entries are all within epsilon is
 * skipped. Every other row, above and below, is cross-cancelled against the
 * pivot row.
 */
inline RrefOutcome rref_serial(const DenseMatrix& m, const RrefConfig& cfg = {}) {
    require_finite(m);
    InlineExecutor exec;
    return detail::rref_with(m, cfg, resolve_epsilon(m, cfg), exec);
}

inline std::size_t rank(const DenseMatrix& m, const RrefConfig& cfg = {}) {
    return rref_serial(m, cfg).rank;
}

}  // namespace fedlad::linalg

#endif  // FEDLAD_LINALG_RREF_HPP
