// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_LINALG_DENSE_MATRIX_HPP
#define FEDLAD_LINALG_DENSE_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace fedlad::linalg {

namespace detail {

// Value-initialisation becomes default-initialisation, so resize() leaves doubles unwritten.
template <typename T>
struct NoFillAllocator : std::allocator<T> {
    template <typename U>
    struct rebind {
        using other = NoFillAllocator<U>;
    };
    NoFillAllocator() = default;
    template <typename U>
    NoFillAllocator(const NoFillAllocator<U>&) noexcept {}

    template <typename U>
    void construct(U* p) noexcept(std::is_nothrow_default_constructible_v<U>) {
        ::new (static_cast<void*>(p)) U;
    }
    template <typename U, typename... Args>
    void construct(U* p, Args&&... args) {
        ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
};

}  // namespace detail

/*
 * Row-major dense matrix of doubles. Rows are the unit of work everywhere in
 * this library: a row is one flattened local model, and the RREF routines
 * permute and combine whole rows.
 *
 * Empty matrices are rejected at construction.
 */
class DenseMatrix {
public:
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols) {
        check_shape(rows, cols);
        data_.assign(rows * cols, fill);
    }

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
        check_shape(rows, cols);
        if (data_.size() != rows * cols) {
            throw std::invalid_argument("DenseMatrix: data length " + std::to_string(data_.size()) +
                                        " does not match " + std::to_string(rows) + "x" +
                                        std::to_string(cols));
        }
    }

    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        check_shape(rows_, cols_);
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) {
                throw std::invalid_argument("DenseMatrix: ragged initializer");
            }
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    /// Entries are left unwritten; the caller must fill every one before reading.
    static DenseMatrix uninitialized(std::size_t rows, std::size_t cols) {
        check_shape(rows, cols);
        DenseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.data_.resize(rows * cols);
        return m;
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    /// Stacks equally long vectors as rows.
    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) {
            throw std::invalid_argument("DenseMatrix: no rows");
        }
        DenseMatrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols()) {
                throw std::invalid_argument("DenseMatrix: row " + std::to_string(i) +
                                            " has length " + std::to_string(rows[i].size()) +
                                            ", expected " + std::to_string(m.cols()));
            }
            std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    void swap_rows(std::size_t a, std::size_t b) noexcept {
        if (a == b) {
            return;
        }
        std::swap_ranges(row(a).begin(), row(a).end(), row(b).begin());
    }

    DenseMatrix transpose() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < cols_; ++c) {
                t(c, r) = (*this)(r, c);
            }
        }
        return t;
    }

    /// Rows picked by index, in the given order.
    DenseMatrix select_rows(std::span<const std::size_t> indices) const {
        DenseMatrix out(indices.size(), cols_);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            auto src = row(indices[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    /// Columns picked by index, in the given order.
    DenseMatrix select_cols(std::span<const std::size_t> indices) const {
        DenseMatrix out(rows_, indices.size());
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t j = 0; j < indices.size(); ++j) {
                out(r, j) = (*this)(r, indices[j]);
            }
        }
        return out;
    }

    double max_abs() const noexcept {
        double m = 0.0;
        for (double x : data_) {
            m = std::max(m, std::abs(x));
        }
        return m;
    }

    bool operator==(const DenseMatrix&) const = default;

private:
    DenseMatrix() = default;

    static void check_shape(std::size_t rows, std::size_t cols) {
        if (rows == 0 || cols == 0) {
            throw std::invalid_argument("DenseMatrix: empty matrices are not supported");
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double, detail::NoFillAllocator<double>> data_;
};

/// Throws std::invalid_argument naming the first row holding NaN or Inf.
inline void require_finite(const DenseMatrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (!std::isfinite(m(r, c))) {
                throw std::invalid_argument("non-finite entry in row " + std::to_string(r) +
                                            " (column " + std::to_string(c) +
                                            "); the model update is corrupted");
            }
        }
    }
}

}  // namespace fedlad::linalg

#endif  // FEDLAD_LINALG_DENSE_MATRIX_HPP
