#pragma once

// Grid-binned sample weights: bins that hold many points and whose members
// are dominated by few others get more training mass.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcd/core.hpp"

namespace pcd {

using CellId = std::vector<std::uint32_t>;

// Equal-width grid with bins_per_dim cells along every objective. Only
// occupied cells are ever materialized, so N_B^m may be large.
struct BinGrid {
    std::size_t bins_per_dim = 1;
    Vector mins;
    Vector maxs;

    template <class Derived>
    CellId cell_of(const Eigen::MatrixBase<Derived>& y) const {
        CellId id(static_cast<std::size_t>(mins.size()));
        for (Eigen::Index j = 0; j < mins.size(); ++j) {
            const double u = (y.derived().coeff(j) - mins(j)) / (maxs(j) - mins(j));
            double b = std::floor(u * static_cast<double>(bins_per_dim));
            b = std::clamp(b, 0.0, static_cast<double>(bins_per_dim - 1));
            id[static_cast<std::size_t>(j)] = static_cast<std::uint32_t>(b);
        }
        return id;
    }
};

struct SampleWeights {
    std::vector<double> w;    // rescaled so mean(w) == 1
    std::vector<double> raw;  // per-sample cell weight before rescaling
    double K = 0.0;
    double tau = 0.0;
};

enum class ReweightMode { none, prune, reweight };

inline ReweightMode parse_reweight_mode(const std::string& s) {
    if (s == "none" || s == "n/a") return ReweightMode::none;
    if (s == "prune") return ReweightMode::prune;
    if (s == "reweight") return ReweightMode::reweight;
    throw ContractError("unknown reweighting mode '" + s + "'");
}

inline std::string to_string(ReweightMode m) {
    switch (m) {
        case ReweightMode::none: return "none";
        case ReweightMode::prune: return "prune";
        case ReweightMode::reweight: return "reweight";
    }
    return "?";
}

inline constexpr std::size_t kDefaultBins = 30;
inline constexpr double kDefaultK = 10.0;
inline constexpr double kDefaultTau = 0.05;

inline BinGrid build_grid(const Matrix& Y, std::size_t bins_per_dim) {
    require(bins_per_dim >= 1, "build_grid: bins_per_dim must be >= 1");
    require(Y.rows() >= 1, "build_grid: empty input");
    BinGrid g;
    g.bins_per_dim = bins_per_dim;
    g.mins = Y.colwise().minCoeff().transpose();
    g.maxs = Y.colwise().maxCoeff().transpose();
    for (Eigen::Index j = 0; j < g.mins.size(); ++j) {
        if (g.maxs(j) <= g.mins(j)) g.maxs(j) = g.mins(j) + kDegenerateSpan;
    }
    return g;
}

// (|B| / (|B| + K)) * exp(-mean_o / tau) for one cell.
inline double cell_weight(std::size_t cell_size, double mean_normalized_dominance, double K, double tau) {
    const double s = static_cast<double>(cell_size);
    return s / (s + K) * std::exp(-mean_normalized_dominance / tau);
}

inline void rescale_to_unit_mean(std::vector<double>& w) {
    double sum = 0.0;
    for (double v : w) sum += v;
    if (sum <= 0.0) return;
    const double f = static_cast<double>(w.size()) / sum;
    for (double& v : w) v *= f;
}

inline SampleWeights compute_weights(const Matrix& Y, const BinGrid& grid, const DominanceStats& dom, double K,
                                     double tau) {
    require(K > 0.0, "compute_weights: K must be > 0");
    require(tau > 0.0, "compute_weights: tau must be > 0");
    require(dom.normalized.size() == static_cast<std::size_t>(Y.rows()), "compute_weights: dominance stats size mismatch");
    require(grid.mins.size() == Y.cols(), "compute_weights: grid dimension mismatch");

    const auto n = static_cast<std::size_t>(Y.rows());
    struct Cell {
        std::size_t count = 0;
        double dom_sum = 0.0;
    };
    std::map<CellId, Cell> cells;
    std::vector<const CellId*> member_cell(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = cells.try_emplace(grid.cell_of(Y.row(static_cast<Eigen::Index>(i))));
        it->second.count += 1;
        it->second.dom_sum += dom.normalized[i];
        member_cell[i] = &it->first;
    }
    std::map<CellId, double> cell_w;
    for (const auto& [id, c] : cells) {
        cell_w[id] = cell_weight(c.count, c.dom_sum / static_cast<double>(c.count), K, tau);
    }
    SampleWeights out;
    out.K = K;
    out.tau = tau;
    out.raw.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.raw[i] = cell_w.at(*member_cell[i]);
    out.w = out.raw;
    rescale_to_unit_mean(out.w);
    return out;
}

// Pruning baseline: keeps whole fronts F_1..F_k until at least
// keep_fraction of the data is retained; kept samples weigh 1, others 0.
inline SampleWeights prune_weights(const FrontPartition& fronts, double keep_fraction) {
    require(keep_fraction > 0.0 && keep_fraction <= 1.0, "prune_weights: keep_fraction must be in (0, 1]");
    const std::size_t n = fronts.rank_of.size();
    SampleWeights out;
    out.w.assign(n, 0.0);
    const auto target = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n)));
    std::size_t kept = 0;
    for (const IndexList& f : fronts.fronts) {
        if (kept >= target) break;
        for (std::size_t i : f) out.w[i] = 1.0;
        kept += f.size();
    }
    out.raw = out.w;
    return out;
}

inline SampleWeights uniform_weights(std::size_t n) {
    SampleWeights out;
    out.w.assign(n, 1.0);
    out.raw = out.w;
    return out;
}

inline double coefficient_of_variation(const std::vector<double>& w) {
    if (w.empty()) return 0.0;
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (double v : w) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.size());
    return mean > 0.0 ? std::sqrt(var) / mean : 0.0;
}

}  // namespace pcd
