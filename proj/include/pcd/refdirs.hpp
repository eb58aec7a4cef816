#pragma once

// Direction vectors on the unit simplex: the Das-Dennis lattice and Riesz
// s-energy minimization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pcd/core.hpp"
#include "pcd/rng.hpp"

namespace pcd {

enum class RefDirMethod { riesz, das_dennis };

inline RefDirMethod parse_refdir_method(const std::string& s) {
    if (s == "riesz") return RefDirMethod::riesz;
    if (s == "das-dennis" || s == "das_dennis") return RefDirMethod::das_dennis;
    throw ContractError("unknown reference direction method '" + s + "'");
}

inline std::string to_string(RefDirMethod m) { return m == RefDirMethod::riesz ? "riesz" : "das-dennis"; }

struct ReferenceDirections {
    Matrix W;  // L x m, rows non-negative and summing to one
    RefDirMethod method = RefDirMethod::riesz;

    std::size_t size() const { return static_cast<std::size_t>(W.rows()); }
};

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// All compositions (k_1..k_m)/H with sum H, first coordinate descending.
inline ReferenceDirections das_dennis(std::size_t m, std::size_t H) {
    require(m >= 2, "das_dennis: m must be >= 2");
    require(H >= 1, "das_dennis: H must be >= 1");
    const auto L = binomial(H + m - 1, m - 1);
    ReferenceDirections out;
    out.method = RefDirMethod::das_dennis;
    out.W.resize(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(m));
    std::vector<std::size_t> k(m, 0);
    Eigen::Index row = 0;
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
        if (pos + 1 == m) {
            k[pos] = left;
            for (std::size_t j = 0; j < m; ++j) {
                out.W(row, static_cast<Eigen::Index>(j)) = static_cast<double>(k[j]) / static_cast<double>(H);
            }
            ++row;
            return;
        }
        for (std::size_t v = left + 1; v-- > 0;) {
            k[pos] = v;
            rec(pos + 1, left - v);
        }
    };
    rec(0, H);
    return out;
}

// Das-Dennis with L rows: the smallest lattice holding at least L points,
// subsampled by stride when it overshoots.
inline ReferenceDirections das_dennis_count(std::size_t m, std::size_t L) {
    require(L >= 1, "das_dennis_count: L must be >= 1");
    std::size_t H = 1;
    while (binomial(H + m - 1, m - 1) < L) ++H;
    ReferenceDirections full = das_dennis(m, H);
    const std::size_t total = full.size();
    if (total == L) return full;
    IndexList idx(L);
    for (std::size_t i = 0; i < L; ++i) idx[i] = L == 1 ? 0 : i * (total - 1) / (L - 1);
    full.W = select_rows(full.W, idx);
    return full;
}

// Euclidean projection onto {w : w >= 0, sum w = 1}.
inline Vector project_to_simplex(const Vector& v) {
    const auto n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        cumsum += u[static_cast<std::size_t>(i)];
        const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
        if (u[static_cast<std::size_t>(i)] - t > 0.0) theta = t;
    }
    return (v.array() - theta).max(0.0).matrix();
}

// log sum_{i<j} ||w_i - w_j||^{-s}, evaluated stably.
inline double riesz_log_energy(const Matrix& W, double s) {
    const Eigen::Index L = W.rows();
    double maxv = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(L * (L - 1) / 2));
    for (Eigen::Index i = 0; i < L; ++i) {
        for (Eigen::Index j = i + 1; j < L; ++j) {
            const double dist = std::max((W.row(i) - W.row(j)).norm(), 1e-300);
            const double t = -s * std::log(dist);
            terms.push_back(t);
            maxv = std::max(maxv, t);
        }
    }
    if (terms.empty()) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - maxv);
    return maxv + std::log(acc);
}

struct RieszSettings {
    std::size_t iterations = 1000;
    double step = 1e-2;
    double decay = 0.995;
};

namespace detail {

// Gradient of the log energy with respect to every row.
inline Matrix riesz_log_energy_grad(const Matrix& W, double s, double log_energy) {
    const Eigen::Index L = W.rows();
    Matrix G = Matrix::Zero(L, W.cols());
    for (Eigen::Index i = 0; i < L; ++i) {
        for (Eigen::Index j = i + 1; j < L; ++j) {
            const Eigen::RowVectorXd diff = W.row(i) - W.row(j);
            const double d2 = std::max(diff.squaredNorm(), 1e-300);
            // share = d^{-s} / E
            const double share = std::exp(-0.5 * s * std::log(d2) - log_energy);
            const Eigen::RowVectorXd g = (-s * share / d2) * diff;
            G.row(i) += g;
            G.row(j) -= g;
        }
    }
    return G;
}

}  // namespace detail

// Seeded random simplex points with the first min(L, m) rows pinned to the
// simplex corners, then projected gradient descent on the log energy with
// s = m^2. Steps that raise the energy are rejected, so the result never
// has higher energy than the start.
inline ReferenceDirections riesz_s_energy(std::size_t m, std::size_t L, std::uint64_t seed,
                                          const RieszSettings& settings = {}) {
    require(m >= 2, "riesz_s_energy: m must be >= 2");
    require(L >= 2, "riesz_s_energy: L must be >= 2");
    const double s = static_cast<double>(m * m);
    const std::size_t pinned = std::min(L, m);
    const auto rows = static_cast<Eigen::Index>(L);
    const auto cols = static_cast<Eigen::Index>(m);

    Matrix W = Matrix::Zero(rows, cols);
    for (std::size_t i = 0; i < pinned; ++i) W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    Rng rng(seed);
    for (Eigen::Index i = static_cast<Eigen::Index>(pinned); i < rows; ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            W(i, j) = -std::log(1.0 - rng.uniform());
            sum += W(i, j);
        }
        W.row(i) /= sum;
    }

    double log_e = riesz_log_energy(W, s);
    double lr = settings.step;
    for (std::size_t it = 0; it < settings.iterations && static_cast<std::size_t>(rows) > pinned; ++it) {
        Matrix G = detail::riesz_log_energy_grad(W, s, log_e);
        double gmax = 0.0;
        for (Eigen::Index i = static_cast<Eigen::Index>(pinned); i < rows; ++i) {
            G.row(i).array() -= G.row(i).mean();  // tangent to the simplex plane
            gmax = std::max(gmax, G.row(i).norm());
        }
        if (gmax <= 0.0) break;
        Matrix trial = W;
        for (Eigen::Index i = static_cast<Eigen::Index>(pinned); i < rows; ++i) {
            const Vector moved = (W.row(i) - (lr / gmax) * G.row(i)).transpose();
            trial.row(i) = project_to_simplex(moved).transpose();
        }
        const double trial_e = riesz_log_energy(trial, s);
        if (trial_e <= log_e) {
            W = std::move(trial);
            log_e = trial_e;
            lr *= settings.decay;
        } else {
            lr *= 0.5;
        }
    }
    return {W, RefDirMethod::riesz};
}

inline ReferenceDirections make_directions(RefDirMethod method, std::size_t m, std::size_t L, std::uint64_t seed) {
    if (method == RefDirMethod::das_dennis) return das_dennis_count(m, L);
    if (L == 1) return das_dennis_count(m, 1);
    return riesz_s_energy(m, L, seed);
}

}  // namespace pcd
