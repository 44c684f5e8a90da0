// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fedlad/linalg/rref.hpp"
#include "fedlad/parallel/bench.hpp"
#include "fedlad/parallel/parallel_rref.hpp"
#include "fedlad/parallel/thread_pool.hpp"
#include "test_support.hpp"

using fedlad::linalg::DenseMatrix;
using fedlad::linalg::RrefConfig;
using fedlad::parallel::IndexedBlock;
using fedlad::parallel::ParallelConfig;
using fedlad::parallel::SplitAxis;
using Index = std::vector<std::size_t>;

namespace {

ParallelConfig workers(std::size_t n) {
    ParallelConfig p;
    p.workers = n;
    return p;
}

DenseMatrix counting_matrix(std::size_t rows, std::size_t cols) {
    DenseMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(r, c) = static_cast<double>(r * cols + c);
        }
    }
    return m;
}

}  // namespace

TEST(ThreadPool, RunsEveryChunkOnceAndPropagatesErrors) {
    fedlad::parallel::ThreadPool pool(4);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::atomic<int>> hits(37);
        pool.run(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
        for (auto& h : hits) {
            ASSERT_EQ(h.load(), 1);
        }
    }
    EXPECT_THROW(pool.run(8, [](std::size_t i) {
        if (i == 5) {
            throw std::runtime_error("boom");
        }
    }),
                 std::runtime_error);
}

TEST(Split, EvenSplit) {
    const auto blocks = fedlad::parallel::split(IndexedBlock::root(counting_matrix(10, 8)), 2, SplitAxis::rows);
    ASSERT_EQ(blocks.size(), 2u);
    EXPECT_EQ(blocks[0].block.rows(), 5u);
    EXPECT_EQ(blocks[1].block.rows(), 5u);
    EXPECT_EQ(blocks[0].origin, (Index{0, 1, 2, 3, 4}));
    EXPECT_EQ(blocks[1].origin, (Index{5, 6, 7, 8, 9}));
}

TEST(Split, RemainderGoesToLastBlock) {
    const auto blocks = fedlad::parallel::split(IndexedBlock::root(counting_matrix(10, 8)), 3, SplitAxis::rows);
    ASSERT_EQ(blocks.size(), 3u);
    EXPECT_EQ(blocks[0].block.rows(), 3u);
    EXPECT_EQ(blocks[1].block.rows(), 3u);
    EXPECT_EQ(blocks[2].block.rows(), 4u);
    EXPECT_EQ(blocks[2].origin, (Index{6, 7, 8, 9}));
}

TEST(Split, ClampsToExtent) {
    const auto blocks = fedlad::parallel::split(IndexedBlock::root(counting_matrix(2, 6)), 4, SplitAxis::rows);
    ASSERT_EQ(blocks.size(), 2u);
    EXPECT_EQ(blocks[0].block.rows(), 1u);
    EXPECT_EQ(blocks[1].block.rows(), 1u);
    EXPECT_THROW(fedlad::parallel::split(IndexedBlock::root(counting_matrix(2, 6)), 0, SplitAxis::rows),
                 std::invalid_argument);
}

TEST(Split, ConcatenationReproducesInput) {
    const auto m = counting_matrix(7, 11);
    for (auto axis : {SplitAxis::rows, SplitAxis::columns}) {
        const auto blocks = fedlad::parallel::split(IndexedBlock::root(m), 3, axis);
        std::size_t offset = 0;
        for (const auto& b : blocks) {
            for (std::size_t r = 0; r < b.block.rows(); ++r) {
                for (std::size_t c = 0; c < b.block.cols(); ++c) {
                    const double expected = axis == SplitAxis::rows ? m(offset + r, c) : m(r, offset + c);
                    ASSERT_EQ(b.block(r, c), expected);
                }
            }
            offset += axis == SplitAxis::rows ? b.block.rows() : b.block.cols();
        }
        EXPECT_EQ(offset, axis == SplitAxis::rows ? m.rows() : m.cols());
    }
}

TEST(CombineNonzero, CountsAdd) {
    const DenseMatrix a{{1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    const DenseMatrix b{{0, 0, 2}, {0, 0, 4}};
    std::vector<IndexedBlock> blocks{{a, {0, 1, 2}}, {b, {3, 4}}};
    std::vector<fedlad::linalg::RrefOutcome> outs{fedlad::linalg::rref_serial(a), fedlad::linalg::rref_serial(b)};
    const auto combined = fedlad::parallel::combine_nonzero(blocks, outs);
    ASSERT_TRUE(combined.has_value());
    EXPECT_EQ(combined->block.rows(), 3u);
    EXPECT_EQ(combined->origin, (Index{0, 1, 4}));
}

TEST(CombineNonzero, DuplicatesAcrossBlocksReduceToRankOne) {
    const DenseMatrix dup{{3, 1, 4}};
    std::vector<IndexedBlock> blocks{{dup, {0}}, {dup, {1}}};
    std::vector<fedlad::linalg::RrefOutcome> outs{fedlad::linalg::rref_serial(dup),
                                                  fedlad::linalg::rref_serial(dup)};
    const auto combined = fedlad::parallel::combine_nonzero(blocks, outs);
    ASSERT_TRUE(combined.has_value());
    EXPECT_EQ(combined->block.rows(), 2u);
    EXPECT_EQ(fedlad::linalg::rank(combined->block), 1u);
}

TEST(CombineNonzero, SingleBlockPassThroughAndAllZero) {
    const DenseMatrix m{{0, 2}, {0, 0}, {5, 0}};
    const auto out = fedlad::linalg::rref_serial(m);
    std::vector<IndexedBlock> blocks{{m, {7, 8, 9}}};
    std::vector<fedlad::linalg::RrefOutcome> outs{out};
    const auto combined = fedlad::parallel::combine_nonzero(blocks, outs);
    ASSERT_TRUE(combined.has_value());
    EXPECT_EQ(combined->block.rows(), 2u);
    EXPECT_EQ(combined->origin, (Index{9, 7}));

    const DenseMatrix zero(2, 2);
    std::vector<IndexedBlock> zb{{zero, {0, 1}}};
    std::vector<fedlad::linalg::RrefOutcome> zo{fedlad::linalg::rref_serial(zero)};
    EXPECT_FALSE(fedlad::parallel::combine_nonzero(zb, zo).has_value());
}

TEST(RrefParallel, SingleWorkerIsSerial) {
    std::mt19937_64 rng(8);
    const auto m = fedlad::testing::random_real_matrix(rng, 12, 30, 1.0);
    const auto s = fedlad::linalg::rref_serial(m);
    const auto p = fedlad::parallel::rref_parallel(m, {}, workers(1));
    EXPECT_EQ(p.selected_rows, s.selected_rows);
    EXPECT_EQ(p.reduced, s.reduced);
}

TEST(RrefParallel, HandTraceWithRowSplit) {
    const DenseMatrix m{{1, 0}, {0, 1}, {1, 1}};
    ParallelConfig p = workers(2);
    p.smallest_block = 1;
    fedlad::parallel::RecursionTrace trace;
    const auto out = fedlad::parallel::rref_parallel(m, {}, p, &trace);
    EXPECT_EQ(out.selected_rows, (Index{0, 1}));
    ASSERT_FALSE(trace.levels.empty());
    EXPECT_EQ(trace.levels.front().blocks, 2u);
}

// Reduced combinations of a block can win argmax where the original rows would
// not; model identity must still follow the serial pivot decisions.
TEST(RrefParallel, IdentityFollowsOriginalRows) {
    const DenseMatrix m{{1, 3}, {1, 0}, {2, 1}};
    ParallelConfig p = workers(2);
    p.smallest_block = 1;
    const auto out = fedlad::parallel::rref_parallel(m, {}, p);
    EXPECT_EQ(out.selected_rows, (Index{2, 0}));
    EXPECT_EQ(out.selected_rows, fedlad::linalg::rref_serial(m).selected_rows);
}

TEST(RrefParallel, ShortInputSkipsRecursionAndMatchesSerialExactly) {
    std::mt19937_64 rng(19);
    const auto m = fedlad::testing::random_real_matrix(rng, 6, 40000, 1.0);
    RrefConfig cfg;
    cfg.normalize_pivot_row = true;
    fedlad::parallel::RecursionTrace trace;
    const auto p = fedlad::parallel::rref_parallel(m, cfg, workers(4), &trace);
    const auto s = fedlad::linalg::rref_serial(m, cfg);
    EXPECT_TRUE(trace.levels.empty());
    EXPECT_EQ(p.pivot_cols, s.pivot_cols);
    EXPECT_EQ(p.selected_rows, s.selected_rows);
    EXPECT_EQ(p.permutation, s.permutation);
    EXPECT_EQ(p.reduced, s.reduced);
}

TEST(RrefParallel, NonFiniteRejectedWithWorkers) {
    DenseMatrix m(20, 8, 1.0);
    m(13, 2) = std::nan("");
    EXPECT_THROW(fedlad::parallel::rref_parallel(m, {}, workers(4)), std::invalid_argument);
}

TEST(RrefParallel, ShortFatAgreesAcrossWorkerCounts) {
    std::mt19937_64 rng(77);
    const auto m = fedlad::testing::random_real_matrix(rng, 10, 10000, 1.0);
    const auto s = fedlad::linalg::rref_serial(m);
    for (std::size_t w : {2u, 4u, 8u}) {
        const auto p = fedlad::parallel::rref_parallel(m, {}, workers(w));
        EXPECT_EQ(p.rank, s.rank);
        EXPECT_EQ(p.pivot_cols, s.pivot_cols);
        EXPECT_EQ(p.selected_rows, s.selected_rows) << "workers " << w;
        EXPECT_EQ(p.permutation, s.permutation);
    }
}

TEST(RrefParallel, SerialEquivalenceProperty) {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 120; ++trial) {
        DenseMatrix m = trial % 3 == 0   ? fedlad::testing::random_real_matrix(rng, 10, 2000, 0.3)
                        : trial % 3 == 1 ? fedlad::testing::random_real_matrix(rng, 200, 20, 0.3)
                                         : fedlad::testing::random_integer_matrix(rng, 40, 40, 5, 0.3);
        const auto s = fedlad::linalg::rref_serial(m);
        for (std::size_t w : {1u, 2u, 4u, 8u}) {
            const auto p = fedlad::parallel::rref_parallel(m, {}, workers(w));
            ASSERT_EQ(p.selected_rows, s.selected_rows) << "trial " << trial << " workers " << w;
            ASSERT_EQ(p.pivot_cols, s.pivot_cols);
        }
    }
}

TEST(RrefParallel, RankPreservedAtEveryLevelAndTerminates) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const auto m = fedlad::testing::random_real_matrix(rng, 200, 20, 0.3);
        const std::size_t root_rank = fedlad::linalg::rank(m);
        for (std::size_t w : {2u, 4u, 8u}) {
            ParallelConfig p = workers(w);
            p.smallest_block = 4;
            fedlad::parallel::RecursionTrace trace;
            fedlad::parallel::rref_parallel(m, {}, p, &trace);
            const auto bound = static_cast<std::size_t>(
                std::ceil(std::log(static_cast<double>(m.rows())) / std::log(static_cast<double>(w)))) + 1;
            EXPECT_LE(trace.levels.size(), bound);
            for (const auto& level : trace.levels) {
                ASSERT_TRUE(level.combined.has_value());
                EXPECT_EQ(fedlad::linalg::rank(level.combined->block), root_rank);
            }
            for (std::size_t i = 1; i < trace.levels.size(); ++i) {
                EXPECT_LT(trace.levels[i].input_rows, trace.levels[i - 1].input_rows);
            }
            EXPECT_FALSE(trace.full_pass_fallback);
        }
    }
}

TEST(RrefParallel, ColumnChunkedCancelIsBitwiseIdentical) {
    std::mt19937_64 rng(12);
    const auto m = fedlad::testing::random_real_matrix(rng, 9, 20000, 1.0);
    fedlad::linalg::InlineExecutor inline_exec;
    const auto eps = fedlad::linalg::resolve_epsilon(m, {});
    const auto base = fedlad::linalg::detail::rref_with(m, {}, eps, inline_exec);
    for (std::size_t w : {2u, 3u, 8u}) {
        fedlad::parallel::ThreadPool pool(w);
        const auto chunked = fedlad::linalg::detail::rref_with(m, {}, eps, pool);
        EXPECT_EQ(chunked.reduced, base.reduced) << "workers " << w;
    }
}

TEST(RrefParallel, ZeroMatrixAndColumnsMode) {
    const auto z = fedlad::parallel::rref_parallel(DenseMatrix(6, 9), {}, workers(4));
    EXPECT_EQ(z.rank, 0u);
    EXPECT_TRUE(z.selected_rows.empty());

    std::mt19937_64 rng(2);
    const auto m = fedlad::testing::random_real_matrix(rng, 12, 300, 1.0);
    ParallelConfig p = workers(4);
    p.split_axis = SplitAxis::columns;
    const auto out = fedlad::parallel::rref_parallel(m, {}, p);
    EXPECT_EQ(out.rank, fedlad::linalg::rank(m));
}

TEST(RrefParallel, RejectsBadConfig) {
    EXPECT_THROW(fedlad::parallel::rref_parallel(DenseMatrix::identity(2), {}, workers(0)), std::invalid_argument);
    ParallelConfig p = workers(2);
    p.smallest_block = 0;
    EXPECT_THROW(fedlad::parallel::rref_parallel(DenseMatrix::identity(2), {}, p), std::invalid_argument);
}

TEST(RrefParallel, ConcurrentCallersGetSameAnswer) {
    std::mt19937_64 rng(19);
    const auto m = fedlad::testing::random_real_matrix(rng, 30, 3000, 1.0);
    const auto expected = fedlad::linalg::rref_serial(m).selected_rows;
    std::vector<std::future<Index>> futures;
    for (int i = 0; i < 4; ++i) {
        futures.push_back(std::async(std::launch::async, [&] {
            return fedlad::parallel::rref_parallel(m, {}, workers(3)).selected_rows;
        }));
    }
    for (auto& f : futures) {
        EXPECT_EQ(f.get(), expected);
    }
}

TEST(Bench, ReportsConsistentOutcomes) {
    const auto r = fedlad::parallel::bench_rref(10, 20000, 4, 5);
    EXPECT_TRUE(r.outcomes_match);
    EXPECT_GT(r.serial_ms, 0.0);
    EXPECT_GT(r.parallel_ms, 0.0);
    EXPECT_NEAR(r.speedup, r.serial_ms / r.parallel_ms, 1e-12);
}

TEST(Bench, InjectsTwentyPercentDependentRows) {
    const auto m = fedlad::parallel::random_matrix_with_dependencies(10, 500, 0.2, 3);
    EXPECT_EQ(fedlad::linalg::rank(m), 8u);
}

TEST(Bench, SingleWorkerSpeedupNearOne) {
    // Both paths run the same code with one worker; only timer noise remains.
    const auto r = fedlad::parallel::bench_rref(10, 200000, 1, 9, 5);
    EXPECT_GE(r.speedup, 0.9);
    EXPECT_LE(r.speedup, 1.1);
}

TEST(Bench, SerialTimeScalesLinearlyInColumns) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t cols : {100000u, 200000u, 400000u}) {
        const auto r = fedlad::parallel::bench_rref(10, cols, 1, 21, 5);
        xs.push_back(std::log(static_cast<double>(cols)));
        ys.push_back(std::log(r.serial_ms));
    }
    const double mx = (xs[0] + xs[1] + xs[2]) / 3;
    const double my = (ys[0] + ys[1] + ys[2]) / 3;
    double num = 0;
    double den = 0;
    for (int i = 0; i < 3; ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = num / den;
    EXPECT_GT(slope, 0.7);
    EXPECT_LT(slope, 1.3);
}
