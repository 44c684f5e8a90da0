// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_LINALG_EXACT_RREF_HPP
#define FEDLAD_LINALG_EXACT_RREF_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "fedlad/linalg/dense_matrix.hpp"
#include "fedlad/linalg/rref.hpp"

namespace fedlad::linalg {

/*
 * Reference RREF over exact rationals, used as a test oracle.
 *
 * Same pivot rule as rref_serial (largest absolute value, ties to the lowest
 * original row index) but every zero test is exact. `reduced` is returned in
 * canonical form (pivots equal to one), converted to double.
 */
inline RrefOutcome rref_exact_oracle(const DenseMatrix& m) {
    using Rational = boost::multiprecision::cpp_rational;
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();

    std::vector<std::vector<Rational>> w(rows, std::vector<Rational>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double x = m(r, c);
            if (!std::isfinite(x) || std::trunc(x) != x || std::abs(x) > 9.0e15) {
                throw std::invalid_argument("rref_exact_oracle: entry (" + std::to_string(r) + "," +
                                            std::to_string(c) + ") is not an integer");
            }
            w[r][c] = Rational(static_cast<long long>(x));
        }
    }

    RrefOutcome out;
    out.permutation.resize(rows);
    std::iota(out.permutation.begin(), out.permutation.end(), std::size_t{0});

    std::size_t pos = 0;
    for (std::size_t col = 0; col < cols && pos < rows; ++col) {
        Rational best = 0;
        for (std::size_t r = pos; r < rows; ++r) {
            const Rational a = abs(w[r][col]);
            if (a > best) {
                best = a;
            }
        }
        if (best == 0) {
            continue;
        }
        std::size_t pick = rows;
        for (std::size_t r = pos; r < rows; ++r) {
            if (abs(w[r][col]) == best &&
                (pick == rows || out.permutation[r] < out.permutation[pick])) {
                pick = r;
            }
        }
        std::swap(w[pos], w[pick]);
        std::swap(out.permutation[pos], out.permutation[pick]);
        out.pivot_cols.push_back(col);
        out.selected_rows.push_back(out.permutation[pos]);

        const Rational pivot = w[pos][col];
        for (auto& x : w[pos]) {
            x /= pivot;
        }
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == pos || w[r][col] == 0) {
                continue;
            }
            const Rational f = w[r][col];
            for (std::size_t j = 0; j < cols; ++j) {
                w[r][j] -= f * w[pos][j];
            }
        }
        ++pos;
    }
    out.rank = pos;

    DenseMatrix reduced(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            reduced(r, c) = static_cast<double>(w[r][c]);
        }
    }
    out.reduced = std::move(reduced);
    return out;
}

}  // namespace fedlad::linalg

#endif  // FEDLAD_LINALG_EXACT_RREF_HPP
