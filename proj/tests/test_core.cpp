#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pcd/core.hpp"

using pcd::Matrix;
using pcd::Vector;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
    Matrix M(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double v : row) M(i, j++) = v;
        ++i;
    }
    return M;
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

TEST(Dominates, Examples) {
    EXPECT_TRUE(pcd::dominates(vec({1, 2}), vec({2, 2})));
    EXPECT_FALSE(pcd::dominates(vec({1, 2}), vec({2, 1})));
    EXPECT_FALSE(pcd::dominates(vec({2, 1}), vec({1, 2})));
    EXPECT_FALSE(pcd::dominates(vec({1, 1}), vec({1, 1})));
}

TEST(Dominates, LengthMismatchThrows) {
    EXPECT_THROW(pcd::dominates(vec({1, 2}), vec({1, 2, 3})), pcd::ContractError);
}

TEST(Dominates, AntisymmetryAndTransitivity) {
    std::mt19937_64 gen(11);
    for (int t = 0; t < 2000; ++t) {
        const Matrix Y = oracle::random_objectives(gen, 3, 3, true);
        const Vector a = Y.row(0).transpose(), b = Y.row(1).transpose(), c = Y.row(2).transpose();
        EXPECT_FALSE(pcd::dominates(a, b) && pcd::dominates(b, a));
        if (pcd::dominates(a, b) && pcd::dominates(b, c)) EXPECT_TRUE(pcd::dominates(a, c));
    }
}

TEST(NonDominatedSort, Examples) {
    auto fp = pcd::non_dominated_sort(rows({{0, 0}, {1, 1}, {0, 2}, {2, 0}}));
    ASSERT_EQ(fp.fronts.size(), 2u);
    EXPECT_EQ(fp.fronts[0], (pcd::IndexList{0}));
    EXPECT_EQ(fp.fronts[1], (pcd::IndexList{1, 2, 3}));

    fp = pcd::non_dominated_sort(rows({{3, 3}, {3, 3}, {3, 3}}));
    ASSERT_EQ(fp.fronts.size(), 1u);
    EXPECT_EQ(fp.fronts[0], (pcd::IndexList{0, 1, 2}));

    fp = pcd::non_dominated_sort(rows({{0, 0}, {1, 0}, {2, 0}}));
    ASSERT_EQ(fp.fronts.size(), 3u);
    EXPECT_EQ(fp.rank_of, (pcd::IndexList{0, 1, 2}));
}

TEST(NonDominatedSort, EmptyThrows) { EXPECT_THROW(pcd::non_dominated_sort(Matrix(0, 2)), pcd::ContractError); }

TEST(NonDominatedSort, MatchesPeelingOracle) {
    std::mt19937_64 gen(5);
    for (int t = 0; t < 120; ++t) {
        const std::size_t n = 1 + gen() % 150;
        const std::size_t m = 2 + gen() % 3;
        const Matrix Y = oracle::random_objectives(gen, n, m, t % 2 == 0);
        const auto fp = pcd::non_dominated_sort(Y);
        EXPECT_EQ(fp.fronts, oracle::peel_fronts(Y));
        for (std::size_t k = 0; k < fp.fronts.size(); ++k)
            for (std::size_t i : fp.fronts[k]) EXPECT_EQ(fp.rank_of[i], k);
    }
}

TEST(DominanceNumbers, Examples) {
    auto s = pcd::dominance_numbers(rows({{0, 0}, {1, 1}, {0, 2}, {2, 0}}));
    EXPECT_EQ(s.counts, (std::vector<std::size_t>{0, 1, 1, 1}));
    EXPECT_DOUBLE_EQ(s.normalized[1], 1.0 / 3.0);
    s = pcd::dominance_numbers(rows({{4, 2}}));
    EXPECT_EQ(s.counts, (std::vector<std::size_t>{0}));
    EXPECT_EQ(s.normalized[0], 0.0);
    s = pcd::dominance_numbers(rows({{1, 1}, {1, 1}}));
    EXPECT_EQ(s.counts, (std::vector<std::size_t>{0, 0}));
}

TEST(DominanceNumbers, MatchesPairwiseOracleAndFirstFront) {
    std::mt19937_64 gen(6);
    for (int t = 0; t < 80; ++t) {
        const Matrix Y = oracle::random_objectives(gen, 1 + gen() % 120, 2 + gen() % 3, t % 3 == 0);
        const auto s = pcd::dominance_numbers(Y);
        EXPECT_EQ(s.counts, oracle::pairwise_counts(Y));
        const auto fp = pcd::non_dominated_sort(Y);
        for (std::size_t i = 0; i < s.counts.size(); ++i) EXPECT_EQ(s.counts[i] == 0, fp.rank_of[i] == 0);
    }
}

TEST(Normalization, IdealNadirAndDegenerateRules) {
    pcd::OfflineDataset ds;
    ds.X = Matrix::Zero(2, 1);
    ds.lower_bounds = Vector::Zero(1);
    ds.upper_bounds = Vector::Ones(1);
    ds.Y = rows({{0, 1}, {1, 0}});
    auto s = pcd::compute_normalization(ds);
    EXPECT_EQ(s.ideal, vec({0, 0}));
    EXPECT_EQ(s.nadir, vec({1, 1}));

    ds.Y = rows({{2, 2}, {2, 2}});
    s = pcd::compute_normalization(ds);
    EXPECT_EQ(s.ideal, vec({2, 2}));
    EXPECT_DOUBLE_EQ(s.nadir(0), 2.0 + pcd::kDegenerateSpan);
    EXPECT_EQ(s.y_std, vec({1, 1}));

    ds.Y = rows({{0, 5}, {1, 5}});
    s = pcd::compute_normalization(ds);
    EXPECT_EQ(s.y_std(1), 1.0);
    EXPECT_NEAR(s.y_std(0), std::sqrt(0.5), 1e-15);
}

TEST(Normalization, RoundTrip) {
    pcd::NormalizationStats s;
    s.ideal = vec({1, -2, 0});
    s.nadir = vec({3, 2, 0.5});
    const Vector y = vec({2, 0, 0.25});
    EXPECT_TRUE(s.normalize(y).isApprox(vec({0.5, 0.5, 0.5})));
    EXPECT_TRUE(s.denormalize(s.normalize(y)).isApprox(y));
    const Matrix r = rows({{2, 0, 0.25}});
    EXPECT_TRUE(s.normalize(r.row(0)).isApprox(vec({0.5, 0.5, 0.5})));
}

TEST(PerpendicularDistance, Examples) {
    EXPECT_DOUBLE_EQ(pcd::perpendicular_distance(vec({1, 1}), vec({1, 0})), 1.0);
    const double h = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(pcd::perpendicular_distance(vec({2, 2}), vec({h, h})), 0.0, 1e-15);
    EXPECT_EQ(pcd::perpendicular_distance(vec({0, 0}), vec({h, h})), 0.0);
    EXPECT_THROW(pcd::perpendicular_distance(vec({1, 1}), vec({0, 0})), pcd::ContractError);
    EXPECT_THROW(pcd::perpendicular_distance(vec({1, 1}), vec({1, 1})), pcd::ContractError);
}

TEST(PerpendicularDistance, ReflectionInvariant) {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int t = 0; t < 500; ++t) {
        Vector w = vec({u(gen), u(gen)});
        w.normalize();
        const Vector p = vec({u(gen), u(gen)});
        const Vector reflected = 2.0 * p.dot(w) * w - p;
        EXPECT_NEAR(pcd::perpendicular_distance(p, w), pcd::perpendicular_distance(reflected, w), 1e-12);
    }
}

TEST(CrowdingDistance, BoundaryInfiniteInteriorFinite) {
    const Matrix Y = rows({{0, 3}, {1, 2}, {2, 1}, {3, 0}});
    const auto cd = pcd::crowding_distance(Y, {0, 1, 2, 3});
    EXPECT_TRUE(std::isinf(cd[0]));
    EXPECT_TRUE(std::isinf(cd[3]));
    EXPECT_DOUBLE_EQ(cd[1], 2.0 / 3.0 + 2.0 / 3.0);
}
