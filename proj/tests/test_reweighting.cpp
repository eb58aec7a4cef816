#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pcd/benchmarks.hpp"
#include "pcd/reweighting.hpp"

using pcd::Matrix;
using pcd::Vector;

TEST(BinGrid, Examples) {
    const Matrix Y{{0, 0}, {1, 1}, {0.4, 0.6}};
    const auto g = pcd::build_grid(Y, 2);
    EXPECT_EQ(g.cell_of(Vector{{0.4, 0.6}}), (pcd::CellId{0, 1}));
    EXPECT_EQ(g.cell_of(Vector{{1.0, 1.0}}), (pcd::CellId{1, 1}));
    EXPECT_EQ(g.cell_of(Vector{{0.0, 0.0}}), (pcd::CellId{0, 0}));
    const auto one = pcd::build_grid(Y, 1);
    for (Eigen::Index i = 0; i < Y.rows(); ++i) EXPECT_EQ(one.cell_of(Y.row(i)), (pcd::CellId{0, 0}));
    EXPECT_THROW(pcd::build_grid(Y, 0), pcd::ContractError);
}

TEST(CellWeight, HandEvaluatedValues) {
    EXPECT_NEAR(pcd::cell_weight(10, 0.0, 10.0, 0.05), 0.5, 1e-12);
    EXPECT_NEAR(pcd::cell_weight(10, 0.05, 10.0, 0.05), 0.5 * std::exp(-1.0), 1e-12);
    EXPECT_NEAR(pcd::cell_weight(10, 0.05, 10.0, 0.05), 0.18394, 1e-5);
}

TEST(CellWeight, MonotoneInQualityAndSize) {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t s = 1 + gen() % 200;
        const double K = 0.1 + 20 * u(gen), tau = 0.01 + u(gen);
        const double a = u(gen) * 0.5, b = a + 1e-3 + u(gen) * 0.5;
        EXPECT_GT(pcd::cell_weight(s, a, K, tau), pcd::cell_weight(s, b, K, tau));
        EXPECT_LT(pcd::cell_weight(s, a, K, tau), pcd::cell_weight(s + 1 + gen() % 10, a, K, tau));
    }
}

TEST(ComputeWeights, MembersInheritCellWeightAndMeanIsOne) {
    // Cell (0,0) holds two points at dominance 0; cell (1,1) holds one point
    // dominated by both.
    const Matrix Y{{0, 0}, {0, 0}, {1, 1}};
    const auto g = pcd::build_grid(Y, 2);
    const auto dom = pcd::dominance_numbers(Y);
    const auto w = pcd::compute_weights(Y, g, dom, 10.0, 0.05);
    const double a = 2.0 / 12.0, b = 1.0 / 11.0 * std::exp(-1.0 / 0.05);
    EXPECT_NEAR(w.raw[0], a, 1e-15);
    EXPECT_NEAR(w.raw[2], b, 1e-15);
    const double scale = 3.0 / (2 * a + b);
    EXPECT_NEAR(w.w[0], a * scale, 1e-12);
    EXPECT_NEAR(w.w[1], w.w[0], 0.0);
    EXPECT_NEAR(w.w[0] + w.w[1] + w.w[2], 3.0, 1e-12);
}

TEST(ComputeWeights, SumIsNAndPositive) {
    const auto ds = pcd::generate_offline_dataset(pcd::make_task("dtlz7", 0, 3), 2000, 4, pcd::SamplingStrategy::ea_collected);
    const auto g = pcd::build_grid(ds.Y, 30);
    const auto dom = pcd::dominance_numbers(ds.Y);
    const auto w = pcd::compute_weights(ds.Y, g, dom, 10.0, 0.05);
    double sum = 0;
    for (double v : w.w) {
        EXPECT_GT(v, 0.0);
        sum += v;
    }
    EXPECT_NEAR(sum, 2000.0, 1e-9);
}

TEST(ComputeWeights, HigherTauFlattensWeights) {
    const auto ds = pcd::generate_offline_dataset(pcd::make_task("zdt2"), 1500, 5, pcd::SamplingStrategy::ea_collected);
    const auto g = pcd::build_grid(ds.Y, 30);
    const auto dom = pcd::dominance_numbers(ds.Y);
    double prev = INFINITY;
    for (double tau : {0.01, 0.05, 0.1, 0.5, 1.0, 5.0}) {
        const double cv = pcd::coefficient_of_variation(pcd::compute_weights(ds.Y, g, dom, 10.0, tau).w);
        EXPECT_LT(cv, prev) << "tau=" << tau;
        prev = cv;
    }
}

TEST(ComputeWeights, LargeTauDependsOnlyOnCellSize) {
    const Matrix Y{{0, 0}, {0.1, 0.1}, {1, 1}, {0.9, 0.9}};
    const auto g = pcd::build_grid(Y, 2);
    const auto w = pcd::compute_weights(Y, g, pcd::dominance_numbers(Y), 10.0, 1e12);
    for (double v : w.w) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(ComputeWeights, InvalidParametersThrow) {
    const Matrix Y{{0, 0}, {1, 1}};
    const auto g = pcd::build_grid(Y, 2);
    const auto dom = pcd::dominance_numbers(Y);
    EXPECT_THROW(pcd::compute_weights(Y, g, dom, 0.0, 0.05), pcd::ContractError);
    EXPECT_THROW(pcd::compute_weights(Y, g, dom, 10.0, 0.0), pcd::ContractError);
}

TEST(PruneWeights, KeepsWholeFronts) {
    const Matrix Y{{0, 0}, {1, 1}, {0, 2}, {2, 0}, {3, 3}};
    const auto fp = pcd::non_dominated_sort(Y);
    const auto w = pcd::prune_weights(fp, 0.2);
    EXPECT_EQ(w.w, (std::vector<double>{1, 0, 0, 0, 0}));
    const auto w2 = pcd::prune_weights(fp, 0.5);
    EXPECT_EQ(w2.w, (std::vector<double>{1, 1, 1, 1, 0}));
}
