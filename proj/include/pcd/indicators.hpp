#pragma once

// Hypervolume (exact and Monte Carlo) and the percentile-filtered evaluation
// protocol. Points are rows of a Q x m matrix; minimization convention.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "pcd/core.hpp"
#include "pcd/rng.hpp"

namespace pcd {

struct HvReport {
    double hv_100 = 0.0;
    double hv_75 = 0.0;
    double hv_50 = 0.0;
    Vector reference_point;
    std::size_t n_100 = 0;
    std::size_t n_75 = 0;
    std::size_t n_50 = 0;
};

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

namespace detail {

using PointSet = std::vector<std::vector<double>>;

inline bool weakly_dominates(const std::vector<double>& a, const std::vector<double>& b, std::size_t m) {
    for (std::size_t k = 0; k < m; ++k) {
        if (a[k] > b[k]) return false;
    }
    return true;
}

// Removes points weakly dominated by another point; keeps the first of any
// duplicates.
inline PointSet nondominated(const PointSet& pts, std::size_t m) {
    PointSet out;
    out.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < pts.size() && keep; ++j) {
            if (i == j) continue;
            if (weakly_dominates(pts[j], pts[i], m)) {
                // Equal points: keep the lower index only.
                const bool equal = weakly_dominates(pts[i], pts[j], m);
                if (!equal || j < i) keep = false;
            }
        }
        if (keep) out.push_back(pts[i]);
    }
    return out;
}

// Points strictly better than ref in every coordinate; the rest have an
// empty box and contribute nothing.
inline PointSet effective_points(const Matrix& points, const Vector& ref) {
    require(ref.allFinite(), "hypervolume: reference point must be finite");
    require(points.rows() == 0 || points.cols() == ref.size(), "hypervolume: dimension mismatch");
    require(points.allFinite(), "hypervolume: non-finite point");
    PointSet out;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        bool inside = true;
        for (Eigen::Index k = 0; k < ref.size(); ++k) {
            if (!(points(i, k) < ref(k))) {
                inside = false;
                break;
            }
        }
        if (inside) {
            out.emplace_back(points.row(i).data(), points.row(i).data() + points.cols());
        }
    }
    return out;
}

// Two-objective sweep: horizontal strips in ascending first coordinate.
inline double hv_sweep2d(PointSet pts, const std::vector<double>& ref) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
    });
    double hv = 0.0;
    double cur = ref[1];
    for (const auto& p : pts) {
        if (p[1] < cur) {
            hv += (ref[0] - p[0]) * (cur - p[1]);
            cur = p[1];
        }
    }
    return hv;
}

inline double box_volume(const std::vector<double>& p, const std::vector<double>& ref, std::size_t m) {
    double v = 1.0;
    for (std::size_t k = 0; k < m; ++k) v *= ref[k] - p[k];
    return v;
}

// Exclusive contribution machinery of the WFG algorithm: the hypervolume of a
// non-dominated set is the sum of each point's volume not covered by the
// points after it, computed through limit sets.
inline double hv_wfg(PointSet pts, const std::vector<double>& ref, std::size_t m) {
    if (pts.empty()) return 0.0;
    if (pts.size() == 1) return box_volume(pts[0], ref, m);
    if (m == 2) return hv_sweep2d(std::move(pts), ref);
    // Descending last coordinate keeps limit sets small.
    std::sort(pts.begin(), pts.end(), [m](const auto& a, const auto& b) { return a[m - 1] > b[m - 1]; });
    double total = 0.0;
    PointSet limit;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        double excl = box_volume(pts[k], ref, m);
        if (k + 1 < pts.size()) {
            limit.clear();
            for (std::size_t j = k + 1; j < pts.size(); ++j) {
                std::vector<double> w(m);
                for (std::size_t c = 0; c < m; ++c) w[c] = std::max(pts[k][c], pts[j][c]);
                limit.push_back(std::move(w));
            }
            excl -= hv_wfg(nondominated(limit, m), ref, m);
        }
        total += excl;
    }
    return total;
}

// Hypervolume by slicing along the last objective down to one dimension.
// Independent of the sweep and WFG paths; used to cross-check them.
inline double hv_slice(PointSet pts, const std::vector<double>& ref, std::size_t m) {
    if (pts.empty()) return 0.0;
    if (m == 1) {
        double lo = ref[0];
        for (const auto& p : pts) lo = std::min(lo, p[0]);
        return ref[0] - lo;
    }
    std::sort(pts.begin(), pts.end(), [m](const auto& a, const auto& b) { return a[m - 1] < b[m - 1]; });
    double hv = 0.0;
    PointSet active;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        active.push_back(pts[i]);
        const double top = (i + 1 < pts.size()) ? pts[i + 1][m - 1] : ref[m - 1];
        const double depth = top - pts[i][m - 1];
        if (depth <= 0.0) continue;
        hv += depth * hv_slice(active, ref, m - 1);
    }
    return hv;
}

}  // namespace detail

inline double hypervolume_exact(const Matrix& points, const Vector& ref) {
    require(ref.size() >= 1, "hypervolume_exact: empty reference point");
    detail::PointSet eff = detail::effective_points(points, ref);
    if (eff.empty()) return 0.0;
    const auto m = static_cast<std::size_t>(ref.size());
    std::vector<double> r(ref.data(), ref.data() + ref.size());
    if (m == 1) return detail::hv_slice(std::move(eff), r, 1);
    if (m == 2) return detail::hv_sweep2d(std::move(eff), r);
    return detail::hv_wfg(detail::nondominated(eff, m), r, m);
}

// Recursive-slicing hypervolume; exposed as an independent cross-check.
inline double hypervolume_slicing(const Matrix& points, const Vector& ref) {
    require(ref.size() >= 1, "hypervolume_slicing: empty reference point");
    detail::PointSet eff = detail::effective_points(points, ref);
    const auto m = static_cast<std::size_t>(ref.size());
    std::vector<double> r(ref.data(), ref.data() + ref.size());
    return detail::hv_slice(detail::nondominated(eff, m), r, m);
}

// Uniform sampling over the box [ideal(points), ref]. The estimate is the box
// volume times the dominated fraction; std_error is the binomial standard
// error scaled by the box volume.
inline McEstimate hypervolume_mc(const Matrix& points, const Vector& ref, std::size_t n_samples,
                                 std::uint64_t seed) {
    require(n_samples >= 1000, "hypervolume_mc: need at least 1000 samples");
    const detail::PointSet eff = detail::effective_points(points, ref);
    if (eff.empty()) return {};
    const auto m = static_cast<std::size_t>(ref.size());
    std::vector<double> lo(m, std::numeric_limits<double>::infinity());
    for (const auto& p : eff) {
        for (std::size_t k = 0; k < m; ++k) lo[k] = std::min(lo[k], p[k]);
    }
    double box = 1.0;
    for (std::size_t k = 0; k < m; ++k) box *= ref(static_cast<Eigen::Index>(k)) - lo[k];

    Rng rng(seed);
    std::vector<double> s(m);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < n_samples; ++t) {
        for (std::size_t k = 0; k < m; ++k) s[k] = rng.uniform(lo[k], ref(static_cast<Eigen::Index>(k)));
        for (const auto& p : eff) {
            if (detail::weakly_dominates(p, s, m)) {
                ++hits;
                break;
            }
        }
    }
    const double n = static_cast<double>(n_samples);
    const double frac = static_cast<double>(hits) / n;
    return {box * frac, box * std::sqrt(frac * (1.0 - frac) / n)};
}

// Indices kept when the lowest-performing (100 - P)% are removed. Survival
// order is non-domination rank, then descending crowding distance, then
// ascending index. Returned in ascending index order.
inline IndexList percentile_filter(const Matrix& Y, double percent) {
    require(Y.rows() >= 1, "percentile_filter: empty input");
    require(percent > 0.0 && percent <= 100.0, "percentile_filter: percent must be in (0, 100]");
    const auto q = static_cast<std::size_t>(Y.rows());
    const auto keep = static_cast<std::size_t>(std::ceil(static_cast<double>(q) * percent / 100.0 - 1e-12));
    IndexList all(q);
    std::iota(all.begin(), all.end(), 0);
    if (keep >= q) return all;

    const FrontPartition fp = non_dominated_sort(Y);
    IndexList survivors;
    survivors.reserve(q);
    for (const IndexList& front : fp.fronts) {
        const std::vector<double> cd = crowding_distance(Y, front);
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (cd[a] != cd[b]) return cd[a] > cd[b];
            return front[a] < front[b];
        });
        for (std::size_t o : order) survivors.push_back(front[o]);
        if (survivors.size() >= keep) break;
    }
    survivors.resize(keep);
    std::sort(survivors.begin(), survivors.end());
    return survivors;
}

inline constexpr double kDefaultRefMultiplier = 1.1;

// Normalizes generated objectives by the dataset ideal/nadir and reports the
// hypervolume at the 100th, 75th and 50th percentiles.
inline HvReport evaluate_run(const Matrix& Y_generated, const NormalizationStats& stats,
                             double ref_multiplier = kDefaultRefMultiplier) {
    require(Y_generated.rows() >= 1, "evaluate_run: need at least one point");
    require(Y_generated.cols() == stats.ideal.size(), "evaluate_run: objective count mismatch");
    const Matrix Yn = stats.normalize_rows(Y_generated);
    HvReport r;
    r.reference_point = Vector::Constant(Yn.cols(), ref_multiplier);
    auto at = [&](double p, double& hv, std::size_t& n) {
        const IndexList kept = percentile_filter(Yn, p);
        n = kept.size();
        hv = hypervolume_exact(select_rows(Yn, kept), r.reference_point);
    };
    at(100.0, r.hv_100, r.n_100);
    at(75.0, r.hv_75, r.n_75);
    at(50.0, r.hv_50, r.n_50);
    return r;
}

}  // namespace pcd
