// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_LINALG_SPAN_HPP
#define FEDLAD_LINALG_SPAN_HPP

#include <algorithm>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "fedlad/linalg/dense_matrix.hpp"

namespace fedlad::linalg {

/*
 * True when v lies in the row space of `basis`: the least-squares residual of
 * projecting v onto the basis rows satisfies |r| <= tol * max(1, |v|).
 * The basis rows must be linearly independent (pass pivot rows).
 */
inline bool is_in_span(std::span<const double> v, const DenseMatrix& basis, double tol) {
    if (v.size() != basis.cols()) {
        throw std::invalid_argument("is_in_span: vector length does not match basis width");
    }
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
    // Columns of A are the basis vectors.
    Mat a(basis.cols(), basis.rows());
    for (std::size_t r = 0; r < basis.rows(); ++r) {
        for (std::size_t c = 0; c < basis.cols(); ++c) {
            a(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = basis(r, c);
        }
    }
    Eigen::ColPivHouseholderQR<Mat> qr(a);
    if (static_cast<std::size_t>(qr.rank()) < basis.rows()) {
        throw std::invalid_argument("is_in_span: basis rows are linearly dependent");
    }
    Eigen::Map<const Eigen::VectorXd> target(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::VectorXd coeffs = qr.solve(target);
    const double residual = (a * coeffs - target).norm();
    return residual <= tol * std::max(1.0, target.norm());
}

}  // namespace fedlad::linalg

#endif  // FEDLAD_LINALG_SPAN_HPP
