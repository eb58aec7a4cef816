#pragma once

// Conditioning targets for sampling. Dataset points are paired with
// reference directions front by front, pushed toward the ideal point along
// their direction, and perturbed with Gaussian noise.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pcd/core.hpp"
#include "pcd/refdirs.hpp"
#include "pcd/rng.hpp"

namespace pcd {

struct AssignmentSet {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (point index, direction index)
    std::vector<std::size_t> niche_counts;
};

struct TargetProvenance {
    std::size_t source = 0;     // dataset row the target came from
    std::size_t direction = 0;  // direction index, or npos when unused
    double distance = 0.0;
    Vector noise;

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
};

struct ConditioningSet {
    Matrix targets;  // Q x m, ideal/nadir-normalized objective space
    std::vector<TargetProvenance> provenance;
};

enum class ConditioningStrategy { refdir, dbest, ideal, dataset_fronts };

inline ConditioningStrategy parse_conditioning_strategy(const std::string& s) {
    if (s == "refdir") return ConditioningStrategy::refdir;
    if (s == "dbest") return ConditioningStrategy::dbest;
    if (s == "ideal") return ConditioningStrategy::ideal;
    if (s == "dataset-fronts") return ConditioningStrategy::dataset_fronts;
    throw ContractError("unknown conditioning strategy '" + s + "'");
}

inline std::string to_string(ConditioningStrategy s) {
    switch (s) {
        case ConditioningStrategy::refdir: return "refdir";
        case ConditioningStrategy::dbest: return "dbest";
        case ConditioningStrategy::ideal: return "ideal";
        case ConditioningStrategy::dataset_fronts: return "dataset-fronts";
    }
    return "?";
}

struct ConditioningParams {
    std::size_t J = 32;
    std::size_t Q = 256;
    double distance = 0.1;
    double noise_sigma = 0.05;
    std::uint64_t seed = 0;
    ConditioningStrategy strategy = ConditioningStrategy::refdir;
};

inline Matrix unit_directions(const ReferenceDirections& dirs) {
    Matrix U = dirs.W;
    for (Eigen::Index l = 0; l < U.rows(); ++l) {
        const double n = U.row(l).norm();
        require(n > 0.0, "reference direction " + std::to_string(l) + " has zero norm");
        U.row(l) /= n;
    }
    return U;
}

// Walks the fronts in rank order. Within a front, every direction first
// takes its perpendicular-nearest member; the remaining members then go one
// at a time to the direction with the smallest niche count. Stops at J pairs.
// Ties resolve to the earlier front member and the lower direction index.
inline AssignmentSet assign_points(const FrontPartition& fronts, const Matrix& Y_norm,
                                   const ReferenceDirections& dirs, std::size_t J) {
    const std::size_t n = fronts.rank_of.size();
    require(static_cast<std::size_t>(Y_norm.rows()) == n, "assign_points: Y_norm rows must match the partition");
    require(J >= 1, "assign_points: J must be >= 1");
    require(J <= n, "assign_points: J=" + std::to_string(J) + " exceeds N=" + std::to_string(n));
    require(dirs.W.cols() == Y_norm.cols(), "assign_points: direction dimension mismatch");
    const Matrix U = unit_directions(dirs);
    const auto L = static_cast<std::size_t>(U.rows());

    AssignmentSet out;
    out.niche_counts.assign(L, 0);
    for (const IndexList& front : fronts.fronts) {
        if (out.pairs.size() >= J) break;
        std::vector<char> taken(front.size(), 0);
        for (std::size_t l = 0; l < L && out.pairs.size() < J; ++l) {
            const Vector w = U.row(static_cast<Eigen::Index>(l)).transpose();
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < front.size(); ++k) {
                const double dist =
                    perpendicular_distance(Y_norm.row(static_cast<Eigen::Index>(front[k])).transpose(), w);
                if (dist < best_d) {
                    best_d = dist;
                    best = k;
                }
            }
            out.pairs.emplace_back(front[best], l);
            taken[best] = 1;
            ++out.niche_counts[l];
        }
        for (std::size_t k = 0; k < front.size() && out.pairs.size() < J; ++k) {
            if (taken[k]) continue;
            const auto it = std::min_element(out.niche_counts.begin(), out.niche_counts.end());
            const auto l = static_cast<std::size_t>(it - out.niche_counts.begin());
            out.pairs.emplace_back(front[k], l);
            ++out.niche_counts[l];
        }
    }
    return out;
}

// Snaps y onto the ray of w and shrinks it toward the origin (the normalized
// ideal point): (1 - distance) * max(y . w_hat, 0) * w_hat.
inline Vector extrapolate(const Vector& y_norm, const Vector& w, double distance) {
    require(y_norm.allFinite(), "extrapolate: non-finite point");
    require(distance >= 0.0 && distance < 1.0, "extrapolate: distance must be in [0, 1)");
    require(y_norm.size() == w.size(), "extrapolate: dimension mismatch");
    const double n = w.norm();
    require(n > 0.0, "extrapolate: zero-norm direction");
    const Vector w_hat = w / n;
    const double t = std::max(y_norm.dot(w_hat), 0.0);
    return (1.0 - distance) * t * w_hat;
}

namespace detail {

inline void add_noise(ConditioningSet& cs, double sigma, std::uint64_t seed) {
    const Eigen::Index m = cs.targets.cols();
    for (Eigen::Index q = 0; q < cs.targets.rows(); ++q) {
        Vector eps = Vector::Zero(m);
        if (sigma > 0.0) {
            Rng rng(seed, static_cast<std::uint64_t>(q));
            for (Eigen::Index j = 0; j < m; ++j) eps(j) = sigma * rng.normal();
        }
        cs.targets.row(q) += eps.transpose();
        cs.provenance[static_cast<std::size_t>(q)].noise = std::move(eps);
    }
}

}  // namespace detail

// Builds Q targets in normalized objective space from the dataset objectives.
inline ConditioningSet generate_conditioning_set(const Matrix& Y, const NormalizationStats& stats,
                                                 const ReferenceDirections& dirs, const ConditioningParams& p) {
    require(p.Q >= 1, "generate_conditioning_set: Q must be >= 1");
    require(p.noise_sigma >= 0.0, "generate_conditioning_set: noise_sigma must be >= 0");
    const Matrix Yn = stats.normalize_rows(Y);
    const FrontPartition fronts = non_dominated_sort(Y);
    const Eigen::Index m = Y.cols();
    ConditioningSet cs;
    cs.targets.resize(static_cast<Eigen::Index>(p.Q), m);
    cs.provenance.resize(p.Q);

    switch (p.strategy) {
        case ConditioningStrategy::refdir:
        case ConditioningStrategy::ideal: {
            require(p.Q >= p.J, "generate_conditioning_set: need Q >= J");
            const AssignmentSet S = assign_points(fronts, Yn, dirs, p.J);
            for (std::size_t q = 0; q < p.Q; ++q) {
                const auto [src, dir] = S.pairs[q % S.pairs.size()];
                const Vector y = Yn.row(static_cast<Eigen::Index>(src)).transpose();
                const Vector base = p.strategy == ConditioningStrategy::refdir
                                        ? extrapolate(y, dirs.W.row(static_cast<Eigen::Index>(dir)).transpose(), p.distance)
                                        : Vector((1.0 - p.distance) * y);
                cs.targets.row(static_cast<Eigen::Index>(q)) = base.transpose();
                cs.provenance[q] = {src, dir, p.distance, {}};
            }
            detail::add_noise(cs, p.noise_sigma, p.seed);
            break;
        }
        case ConditioningStrategy::dbest: {
            const IndexList& best = fronts.fronts.front();
            const std::size_t k = std::min(best.size(), std::max<std::size_t>(p.J, 1));
            IndexList chosen(k);
            for (std::size_t i = 0; i < k; ++i) chosen[i] = best[i * best.size() / k];
            for (std::size_t q = 0; q < p.Q; ++q) {
                const std::size_t src = chosen[q % k];
                cs.targets.row(static_cast<Eigen::Index>(q)) = Yn.row(static_cast<Eigen::Index>(src));
                cs.provenance[q] = {src, TargetProvenance::npos, 0.0, {}};
            }
            detail::add_noise(cs, p.noise_sigma, p.seed);
            break;
        }
        case ConditioningStrategy::dataset_fronts: {
            IndexList order;
            for (const IndexList& f : fronts.fronts) order.insert(order.end(), f.begin(), f.end());
            for (std::size_t q = 0; q < p.Q; ++q) {
                const std::size_t src = order[q % order.size()];
                cs.targets.row(static_cast<Eigen::Index>(q)) = Yn.row(static_cast<Eigen::Index>(src));
                cs.provenance[q] = {src, TargetProvenance::npos, 0.0, Vector::Zero(m)};
            }
            break;
        }
    }
    return cs;
}

}  // namespace pcd
