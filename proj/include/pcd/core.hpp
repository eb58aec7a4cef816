#pragma once

// Pareto machinery shared by every other module: dominance, non-dominated
// sorting, dominance numbers, crowding distance and objective normalization.
// Objectives follow the minimization convention throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcd/error.hpp"

namespace pcd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using DecisionVector = Eigen::VectorXd;
using ObjectiveVector = Eigen::VectorXd;
using IndexList = std::vector<std::size_t>;

struct OfflineDataset {
    Matrix X;  // N x d
    Matrix Y;  // N x m
    Vector lower_bounds;
    Vector upper_bounds;
    std::uint64_t seed = 0;
    std::string task_name;

    std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
    std::size_t n_objectives() const { return static_cast<std::size_t>(Y.cols()); }

    void validate() const {
        require(X.rows() >= 1, "dataset: N must be >= 1");
        require(X.rows() == Y.rows(), "dataset: X and Y row counts differ");
        require(lower_bounds.size() == X.cols() && upper_bounds.size() == X.cols(),
                "dataset: bounds length must equal d");
        require(X.allFinite() && Y.allFinite(), "dataset: non-finite entries");
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            for (Eigen::Index j = 0; j < X.cols(); ++j) {
                require(X(i, j) >= lower_bounds(j) && X(i, j) <= upper_bounds(j),
                        "dataset: row " + std::to_string(i) + " outside bounds");
            }
        }
    }
};

struct FrontPartition {
    std::vector<IndexList> fronts;  // fronts[0] is the non-dominated set
    IndexList rank_of;              // rank_of[i] = index of the front holding i
};

struct DominanceStats {
    std::vector<std::size_t> counts;
    std::vector<double> normalized;  // counts / (N - 1), or 0 when N == 1
};

struct NormalizationStats {
    Vector ideal;  // componentwise minimum of Y
    Vector nadir;  // componentwise maximum over the non-dominated subset
    Vector y_mean;
    Vector y_std;
    Vector x_lower;
    Vector x_upper;

    // Maps raw objectives into the ideal/nadir box.
    template <class Derived>
    Vector normalize(const Eigen::MatrixBase<Derived>& y) const {
        const Vector v = y.derived().reshaped();
        return ((v.array() - ideal.array()) / (nadir - ideal).array()).matrix();
    }

    template <class Derived>
    Vector denormalize(const Eigen::MatrixBase<Derived>& t) const {
        const Vector v = t.derived().reshaped();
        return (ideal.array() + v.array() * (nadir - ideal).array()).matrix();
    }

    Matrix normalize_rows(const Matrix& Y) const {
        Matrix out(Y.rows(), Y.cols());
        for (Eigen::Index i = 0; i < Y.rows(); ++i) out.row(i) = normalize(Y.row(i)).transpose();
        return out;
    }
};

inline constexpr double kDegenerateSpan = 1e-9;

template <class A, class B>
bool dominates(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    require(a.size() == b.size(), "dominates: length mismatch (" + std::to_string(a.size()) +
                                      " vs " + std::to_string(b.size()) + ")");
    bool strict = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double ai = a.derived().coeff(i);
        const double bi = b.derived().coeff(i);
        if (ai > bi) return false;
        if (ai < bi) strict = true;
    }
    return strict;
}

namespace detail {

// Unchecked dominance on contiguous rows.
inline bool row_dominates(const double* a, const double* b, Eigen::Index m) {
    bool strict = false;
    for (Eigen::Index k = 0; k < m; ++k) {
        if (a[k] > b[k]) return false;
        if (a[k] < b[k]) strict = true;
    }
    return strict;
}

inline void check_objectives(const Matrix& Y, const char* who) {
    require(Y.rows() >= 1, std::string(who) + ": empty input");
    require(Y.cols() >= 1, std::string(who) + ": zero objectives");
    require(Y.allFinite(), std::string(who) + ": non-finite objective values");
}

}  // namespace detail

// Front index of a point equals the length of the longest dominance chain
// ending at it. Lexicographic order is a linear extension of dominance, so a
// single pass over that order assigns every rank in O(N^2 m).
inline FrontPartition non_dominated_sort(const Matrix& Y) {
    detail::check_objectives(Y, "non_dominated_sort");
    const auto n = static_cast<std::size_t>(Y.rows());
    const Eigen::Index m = Y.cols();

    IndexList order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (Eigen::Index k = 0; k < m; ++k) {
            if (Y(a, k) != Y(b, k)) return Y(a, k) < Y(b, k);
        }
        return a < b;
    });

    FrontPartition out;
    out.rank_of.assign(n, 0);
    std::size_t max_rank = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t b = order[pos];
        const double* yb = Y.row(b).data();
        std::size_t rank = 0;
        for (std::size_t q = pos; q-- > 0;) {
            const std::size_t a = order[q];
            if (out.rank_of[a] + 1 > rank && detail::row_dominates(Y.row(a).data(), yb, m)) {
                rank = out.rank_of[a] + 1;
                if (rank > max_rank) break;  // cannot exceed max_rank + 1
            }
        }
        out.rank_of[b] = rank;
        max_rank = std::max(max_rank, rank);
    }
    out.fronts.assign(max_rank + 1, {});
    for (std::size_t i = 0; i < n; ++i) out.fronts[out.rank_of[i]].push_back(i);
    return out;
}

inline DominanceStats dominance_numbers(const Matrix& Y) {
    detail::check_objectives(Y, "dominance_numbers");
    const auto n = static_cast<std::size_t>(Y.rows());
    const Eigen::Index m = Y.cols();
    DominanceStats out;
    out.counts.assign(n, 0);
    out.normalized.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* yi = Y.row(i).data();
        std::size_t c = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && detail::row_dominates(Y.row(j).data(), yi, m)) ++c;
        }
        out.counts[i] = c;
        out.normalized[i] = n > 1 ? static_cast<double>(c) / static_cast<double>(n - 1) : 0.0;
    }
    return out;
}

// NSGA-II crowding distance of the members of one front, returned in the
// order of `members`. Boundary points get +infinity.
inline std::vector<double> crowding_distance(const Matrix& Y, const IndexList& members) {
    const std::size_t k = members.size();
    std::vector<double> dist(k, 0.0);
    if (k <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    std::vector<std::size_t> order(k);
    for (Eigen::Index obj = 0; obj < Y.cols(); ++obj) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return Y(members[a], obj) < Y(members[b], obj);
        });
        const double lo = Y(members[order.front()], obj);
        const double hi = Y(members[order.back()], obj);
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        if (hi <= lo) continue;
        for (std::size_t p = 1; p + 1 < k; ++p) {
            dist[order[p]] += (Y(members[order[p + 1]], obj) - Y(members[order[p - 1]], obj)) / (hi - lo);
        }
    }
    return dist;
}

inline NormalizationStats compute_normalization(const OfflineDataset& data) {
    require(data.Y.rows() >= 2, "compute_normalization: need N >= 2");
    detail::check_objectives(data.Y, "compute_normalization");
    const Matrix& Y = data.Y;
    const Eigen::Index m = Y.cols();
    const double n = static_cast<double>(Y.rows());

    NormalizationStats s;
    s.ideal = Y.colwise().minCoeff().transpose();
    const FrontPartition fp = non_dominated_sort(Y);
    s.nadir = Vector::Constant(m, -std::numeric_limits<double>::infinity());
    for (std::size_t i : fp.fronts.front()) {
        s.nadir = s.nadir.cwiseMax(Y.row(i).transpose());
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        if (s.nadir(j) <= s.ideal(j)) s.nadir(j) = s.ideal(j) + kDegenerateSpan;
    }
    s.y_mean = Y.colwise().mean().transpose();
    s.y_std.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double var = (Y.col(j).array() - s.y_mean(j)).square().sum() / (n - 1.0);
        s.y_std(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    s.x_lower = data.lower_bounds;
    s.x_upper = data.upper_bounds;
    return s;
}

inline double perpendicular_distance(const Vector& p, const Vector& w) {
    require(p.size() == w.size(), "perpendicular_distance: length mismatch");
    const double norm = w.norm();
    require(norm > 0.0, "perpendicular_distance: zero-norm direction");
    require(std::abs(norm - 1.0) <= 1e-9, "perpendicular_distance: direction must be unit length");
    return (p - p.dot(w) * w).norm();
}

// Rows of Y selected by index, preserving order.
inline Matrix select_rows(const Matrix& Y, const IndexList& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), Y.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = Y.row(idx[r]);
    return out;
}

}  // namespace pcd
