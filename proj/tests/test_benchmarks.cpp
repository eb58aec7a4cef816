#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "pcd/benchmarks.hpp"
#include "pcd/dataset_io.hpp"
#include "pcd/indicators.hpp"

using pcd::Matrix;
using pcd::Vector;

namespace {

constexpr double kPi = std::numbers::pi;

// Second, loop-based transcription of the standard test problems.
std::vector<double> reference_eval(const std::string& name, const std::vector<double>& x, std::size_t m) {
    const std::size_t n = x.size();
    if (name == "zdt1" || name == "zdt2" || name == "zdt3") {
        double s = 0;
        for (std::size_t i = 1; i < n; ++i) s += x[i];
        const double g = 1 + 9 * s / double(n - 1);
        const double f1 = x[0];
        double h = 0;
        if (name == "zdt1") h = 1 - std::sqrt(f1 / g);
        if (name == "zdt2") h = 1 - (f1 / g) * (f1 / g);
        if (name == "zdt3") h = 1 - std::sqrt(f1 / g) - (f1 / g) * std::sin(10 * kPi * f1);
        return {f1, g * h};
    }
    if (name == "zdt4") {
        double g = 1 + 10 * double(n - 1);
        for (std::size_t i = 1; i < n; ++i) g += x[i] * x[i] - 10 * std::cos(4 * kPi * x[i]);
        return {x[0], g * (1 - std::sqrt(x[0] / g))};
    }
    if (name == "zdt6") {
        const double f1 = 1 - std::exp(-4 * x[0]) * std::pow(std::sin(6 * kPi * x[0]), 6);
        double s = 0;
        for (std::size_t i = 1; i < n; ++i) s += x[i];
        const double g = 1 + 9 * std::pow(s / double(n - 1), 0.25);
        return {f1, g * (1 - (f1 / g) * (f1 / g))};
    }
    if (name == "dtlz1") {
        const std::size_t k = n - m + 1;
        double g = double(k);
        for (std::size_t i = m - 1; i < n; ++i) g += (x[i] - 0.5) * (x[i] - 0.5) - std::cos(20 * kPi * (x[i] - 0.5));
        g *= 100;
        std::vector<double> f(m);
        for (std::size_t i = 0; i < m; ++i) {
            f[i] = 0.5 * (1 + g);
            for (std::size_t j = 0; j < m - 1 - i; ++j) f[i] *= x[j];
            if (i > 0) f[i] *= 1 - x[m - 1 - i];
        }
        return f;
    }
    if (name == "dtlz7") {
        const std::size_t k = n - m + 1;
        double s = 0;
        for (std::size_t i = m - 1; i < n; ++i) s += x[i];
        const double g = 1 + 9 * s / double(k);
        std::vector<double> f(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m - 1));
        double h = double(m);
        for (std::size_t i = 0; i + 1 < m; ++i) h -= f[i] / (1 + g) * (1 + std::sin(3 * kPi * f[i]));
        f.push_back((1 + g) * h);
        return f;
    }
    if (name == "omnitest") {
        double a = 0, b = 0;
        for (double v : x) {
            a += std::sin(kPi * v);
            b += std::cos(kPi * v);
        }
        return {a, b};
    }
    if (name == "vlmop1") {
        double a = 0, b = 0;
        for (double v : x) {
            a += v * v;
            b += (v - 2) * (v - 2);
        }
        return {a, b};
    }
    if (name == "vlmop2") {
        const double c = 1 / std::sqrt(double(n));
        double a = 0, b = 0;
        for (double v : x) {
            a += (v - c) * (v - c);
            b += (v + c) * (v + c);
        }
        return {1 - std::exp(-a), 1 - std::exp(-b)};
    }
    // vlmop3
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return {0.5 * r2 + std::sin(r2),
            std::pow(3 * x[0] - 2 * x[1] + 4, 2) / 8 + std::pow(x[0] - x[1] + 1, 2) / 27 + 15,
            1 / (r2 + 1) - 1.1 * std::exp(-r2)};
}

Vector zeros(std::size_t d) { return Vector::Zero(static_cast<Eigen::Index>(d)); }

}  // namespace

TEST(Tasks, ZdtOneExamples) {
    const auto t = pcd::make_task("zdt1", 8);
    EXPECT_EQ(pcd::evaluate_task(t, zeros(8)), (Vector{{0.0, 1.0}}));
    Vector x = zeros(8);
    x(0) = 1.0;
    EXPECT_EQ(pcd::evaluate_task(t, x), (Vector{{1.0, 0.0}}));
}

TEST(Tasks, DtlzOneOnFrontSumsToHalf) {
    for (std::size_t m : {3u, 4u, 5u, 6u}) {
        const auto t = pcd::make_task("dtlz1", 0, m);
        std::mt19937_64 gen(m);
        std::uniform_real_distribution<double> u(0, 1);
        Vector x = Vector::Constant(static_cast<Eigen::Index>(t.d), 0.5);
        for (std::size_t j = 0; j + 1 < m; ++j) x(static_cast<Eigen::Index>(j)) = u(gen);
        const Vector f = pcd::evaluate_task(t, x);
        EXPECT_EQ(static_cast<std::size_t>(f.size()), m);
        EXPECT_NEAR(f.sum(), 0.5, 1e-12);
    }
}

TEST(Tasks, VlmopTwoSymmetricAtOrigin) {
    const auto t = pcd::make_task("vlmop2");
    const Vector f = pcd::evaluate_task(t, zeros(t.d));
    EXPECT_DOUBLE_EQ(f(0), f(1));
}

TEST(Tasks, OutOfBoundsAndUnknownThrow) {
    const auto t = pcd::make_task("zdt1", 4);
    Vector x = zeros(4);
    x(2) = 1.5;
    EXPECT_THROW(pcd::evaluate_task(t, x), pcd::ContractError);
    EXPECT_THROW(pcd::evaluate_task(t, zeros(3)), pcd::ContractError);
    EXPECT_THROW(pcd::make_task("zdt5"), pcd::ContractError);
    EXPECT_THROW(pcd::make_task("zdt1", 0, 3), pcd::ContractError);
}

TEST(Tasks, MatchReferenceExpressions) {
    for (const auto& name : pcd::task_names()) {
        for (std::size_t m : {2u, 3u, 5u}) {
            const bool many = name == "dtlz1" || name == "dtlz7";
            if (!many && m != 2) continue;
            if (many && m == 2) continue;
            const auto t = pcd::make_task(name, 0, many ? m : 0);
            std::mt19937_64 gen(std::hash<std::string>{}(name) + m);
            for (int k = 0; k < 1000; ++k) {
                std::vector<double> x(t.d);
                Vector xv(static_cast<Eigen::Index>(t.d));
                for (std::size_t j = 0; j < t.d; ++j) {
                    const auto jj = static_cast<Eigen::Index>(j);
                    x[j] = std::uniform_real_distribution<double>(t.lower(jj), t.upper(jj))(gen);
                    xv(jj) = x[j];
                }
                const Vector f = pcd::evaluate_task(t, xv);
                const auto want = reference_eval(name, x, t.m);
                ASSERT_EQ(static_cast<std::size_t>(f.size()), want.size()) << name;
                for (std::size_t i = 0; i < want.size(); ++i) {
                    EXPECT_NEAR(f(static_cast<Eigen::Index>(i)), want[i], 1e-12 * std::max(1.0, std::abs(want[i])))
                        << name;
                }
            }
        }
    }
}

TEST(Fronts, Examples) {
    const Matrix z1 = pcd::sample_true_front(pcd::make_task("zdt1"), 3);
    EXPECT_TRUE(z1.isApprox(Matrix{{0, 1}, {0.25, 0.5}, {1, 0}}));
    const Matrix z2 = pcd::sample_true_front(pcd::make_task("zdt2"), 50);
    for (Eigen::Index i = 0; i < z2.rows(); ++i) EXPECT_NEAR(z2(i, 1), 1 - z2(i, 0) * z2(i, 0), 1e-15);
    const Matrix d1 = pcd::sample_true_front(pcd::make_task("dtlz1", 0, 3), 200);
    for (Eigen::Index i = 0; i < d1.rows(); ++i) {
        EXPECT_NEAR(d1.row(i).sum(), 0.5, 1e-12);
        EXPECT_GE(d1.row(i).minCoeff(), 0.0);
    }
    EXPECT_THROW(pcd::sample_true_front(pcd::make_task("omnitest"), 10), pcd::ContractError);
}

TEST(Fronts, DtlzSevenFrontIsMutuallyNondominated) {
    const Matrix F = pcd::sample_true_front(pcd::make_task("dtlz7", 0, 3), 300);
    EXPECT_EQ(F.rows(), 300);
    EXPECT_EQ(pcd::non_dominated_sort(F).fronts.size(), 1u);
}

TEST(Datasets, NoPointDominatesTrueFront) {
    for (const std::string name : {"zdt1", "zdt2", "zdt3", "zdt4", "zdt6", "dtlz1", "dtlz7"}) {
        const auto t = pcd::make_task(name);
        const auto ds = pcd::generate_offline_dataset(t, 1500, 3, pcd::SamplingStrategy::ea_collected);
        const Matrix F = pcd::sample_true_front(t, 200);
        for (Eigen::Index i = 0; i < ds.Y.rows(); ++i)
            for (Eigen::Index j = 0; j < F.rows(); ++j)
                ASSERT_FALSE(pcd::dominates(ds.Y.row(i), F.row(j))) << name << " row " << i;
    }
}

TEST(Datasets, UniformZdtOneAboveFront) {
    const auto ds = pcd::generate_offline_dataset(pcd::make_task("zdt1"), 2000, 1, pcd::SamplingStrategy::uniform);
    for (Eigen::Index i = 0; i < ds.Y.rows(); ++i) EXPECT_GE(ds.Y(i, 1), 1 - std::sqrt(ds.Y(i, 0)) - 1e-12);
}

TEST(Datasets, LatinHypercubeStrata) {
    const std::size_t n = 97;
    const auto t = pcd::make_task("zdt4", 5);
    const auto ds = pcd::generate_offline_dataset(t, n, 8, pcd::SamplingStrategy::lhs);
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j) {
        std::vector<int> seen(n, 0);
        for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
            const double u = (ds.X(i, j) - t.lower(j)) / (t.upper(j) - t.lower(j));
            ++seen[std::min(n - 1, static_cast<std::size_t>(u * double(n)))];
        }
        for (int s : seen) EXPECT_EQ(s, 1);
    }
}

TEST(Datasets, DeterministicPerSeed) {
    const auto t = pcd::make_task("dtlz7", 0, 4);
    for (auto strat : {pcd::SamplingStrategy::uniform, pcd::SamplingStrategy::lhs, pcd::SamplingStrategy::ea_collected}) {
        const auto a = pcd::encode_dataset(pcd::generate_offline_dataset(t, 500, 12, strat));
        const auto b = pcd::encode_dataset(pcd::generate_offline_dataset(t, 500, 12, strat));
        EXPECT_EQ(a, b);
        const auto c = pcd::encode_dataset(pcd::generate_offline_dataset(t, 500, 13, strat));
        EXPECT_NE(a, c);
    }
}

TEST(Datasets, EaCollectedImprovesOnUniform) {
    const auto t = pcd::make_task("zdt1");
    const auto ea = pcd::generate_offline_dataset(t, 3000, 2, pcd::SamplingStrategy::ea_collected);
    const auto un = pcd::generate_offline_dataset(t, 3000, 2, pcd::SamplingStrategy::uniform);
    const Vector ref = Vector::Constant(2, 11.0);
    EXPECT_GT(pcd::hypervolume_exact(ea.Y, ref), pcd::hypervolume_exact(un.Y, ref));
}

TEST(CountingOracle, CountsEveryCall) {
    const auto t = pcd::make_task("zdt2", 5);
    pcd::CountingOracle oracle(t);
    oracle(Vector::Zero(5));
    oracle.evaluate(Matrix::Zero(7, 5));
    EXPECT_EQ(oracle.calls(), 8u);
    oracle.reset();
    EXPECT_EQ(oracle.calls(), 0u);
}
