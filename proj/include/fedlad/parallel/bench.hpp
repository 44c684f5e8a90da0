// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_PARALLEL_BENCH_HPP
#define FEDLAD_PARALLEL_BENCH_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "fedlad/linalg/dense_matrix.hpp"
#include "fedlad/linalg/rref.hpp"
#include "fedlad/parallel/parallel_rref.hpp"

namespace fedlad::parallel {

/*
 * Uniform [-1, 1) matrix in which round(dependent_fraction * rows) rows are
 * replaced by random combinations of two independent rows.
 */
inline DenseMatrix random_matrix_with_dependencies(std::size_t rows, std::size_t cols,
                                                   double dependent_fraction, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    DenseMatrix m(rows, cols);
    for (double& x : m.data()) {
        x = unit(rng);
    }
    std::size_t dependent = static_cast<std::size_t>(std::floor(dependent_fraction * rows + 0.5));
    if (rows < 3) {
        dependent = 0;
    }
    dependent = std::min(dependent, rows - 2);
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> independent(order.begin() + static_cast<std::ptrdiff_t>(dependent), order.end());
    std::uniform_int_distribution<std::size_t> pick(0, independent.size() - 1);
    for (std::size_t k = 0; k < dependent; ++k) {
        const std::size_t a = independent[pick(rng)];
        const std::size_t b = independent[pick(rng)];
        const double ca = unit(rng);
        const double cb = unit(rng);
        auto dst = m.row(order[k]);
        auto ra = m.row(a);
        auto rb = m.row(b);
        for (std::size_t j = 0; j < cols; ++j) {
            dst[j] = ca * ra[j] + cb * rb[j];
        }
    }
    return m;
}

struct BenchReport {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t workers = 1;
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
    double speedup = 0.0;
    /// Rank, pivot columns and selected rows agreed between the two paths.
    bool outcomes_match = false;
};

/// Times rref_serial against rref_parallel on a seeded matrix; best of `repeats`.
inline BenchReport bench_rref(std::size_t rows, std::size_t cols, std::size_t workers,
                              std::uint64_t seed, std::size_t repeats = 1) {
    const DenseMatrix m = random_matrix_with_dependencies(rows, cols, 0.2, seed);
    const RrefConfig cfg;
    ParallelConfig pcfg;
    pcfg.workers = workers;

    using clock = std::chrono::steady_clock;
    auto time_ms = [](auto&& fn) {
        const auto start = clock::now();
        fn();
        return std::chrono::duration<double, std::milli>(clock::now() - start).count();
    };

    BenchReport report{rows, cols, workers};
    report.serial_ms = std::numeric_limits<double>::infinity();
    report.parallel_ms = std::numeric_limits<double>::infinity();
    RrefOutcome serial;
    RrefOutcome par;
    for (std::size_t i = 0; i < std::max<std::size_t>(repeats, 1); ++i) {
        report.serial_ms = std::min(report.serial_ms, time_ms([&] { serial = linalg::rref_serial(m, cfg); }));
        report.parallel_ms =
            std::min(report.parallel_ms, time_ms([&] { par = rref_parallel(m, cfg, pcfg); }));
    }
    report.speedup = report.parallel_ms > 0.0 ? report.serial_ms / report.parallel_ms : 0.0;
    report.outcomes_match = serial.rank == par.rank && serial.pivot_cols == par.pivot_cols &&
                            serial.selected_rows == par.selected_rows;
    return report;
}

}  // namespace fedlad::parallel

#endif  // FEDLAD_PARALLEL_BENCH_HPP
