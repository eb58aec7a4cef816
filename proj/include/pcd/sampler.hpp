#pragma once

// EDM sampling: rho-spaced noise levels, a guided denoiser, and Heun's
// method with optional stochastic churn.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pcd/conditioning.hpp"
#include "pcd/core.hpp"
#include "pcd/diffusion.hpp"
#include "pcd/rng.hpp"

namespace pcd {

enum class SamplerMode { stochastic, deterministic };

inline SamplerMode parse_sampler_mode(const std::string& s) {
    if (s == "stochastic" || s == "sde") return SamplerMode::stochastic;
    if (s == "deterministic" || s == "ode") return SamplerMode::deterministic;
    throw ContractError("unknown sampler mode '" + s + "'");
}

inline std::string to_string(SamplerMode m) { return m == SamplerMode::stochastic ? "stochastic" : "deterministic"; }

struct SamplerConfig {
    std::size_t steps = 128;
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;
    double s_churn = 80.0;
    double s_tmin = 0.05;
    double s_tmax = 50.0;
    double s_noise = 1.003;
    double guidance_scale = 2.5;
    SamplerMode mode = SamplerMode::stochastic;
    std::uint64_t seed = 0;

    void validate() const {
        require(sigma_min > 0.0 && sigma_min < sigma_max, "SamplerConfig: need 0 < sigma_min < sigma_max");
        require(steps >= 2, "SamplerConfig: steps must be >= 2");
        require(guidance_scale >= 0.0, "SamplerConfig: guidance_scale must be >= 0");
        require(rho > 0.0, "SamplerConfig: rho must be > 0");
        require(s_churn >= 0.0 && s_noise >= 0.0, "SamplerConfig: churn parameters must be >= 0");
    }
};

// S noise levels from sigma_max down to sigma_min, followed by a final 0.
inline std::vector<double> sigma_schedule(const SamplerConfig& cfg) {
    cfg.validate();
    const std::size_t S = cfg.steps;
    const double a = std::pow(cfg.sigma_max, 1.0 / cfg.rho);
    const double b = std::pow(cfg.sigma_min, 1.0 / cfg.rho);
    std::vector<double> out(S + 1, 0.0);
    for (std::size_t i = 0; i < S; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(S - 1);
        out[i] = std::pow(a + t * (b - a), cfg.rho);
    }
    out[0] = cfg.sigma_max;
    out[S - 1] = cfg.sigma_min;
    return out;
}

// gamma * D(x; y, sigma) + (1 - gamma) * D(x; sigma) with the EMA weights.
// Both passes run as separate single-column evaluations so gamma = 1 and
// gamma = 0 reproduce the plain conditional / unconditional outputs exactly.
template <typename T>
Vector cfg_denoise(const DenoiserModel<T>& model, const Vector& x, double sigma, const Vector& target, double gamma) {
    const Vector c = denoise(model, x, sigma, std::optional<Vector>(target), ParamSet::ema);
    const Vector u = denoise(model, x, sigma, std::nullopt, ParamSet::ema);
    return gamma * c + (1.0 - gamma) * u;
}

using DenoiserFn = std::function<Vector(const Vector& x, double sigma)>;

// Runs the sampler from a given initial state x0 (already scaled by
// sigma_max) and returns the final state in the model's standardized space.
// Churn noise is drawn from rng only on steps where it is applied.
inline Vector sample_trajectory(const DenoiserFn& D, Vector x, const SamplerConfig& cfg, Rng& rng) {
    const std::vector<double> sig = sigma_schedule(cfg);
    const std::size_t S = cfg.steps;
    const double gamma_max = std::min(cfg.s_churn / static_cast<double>(S), std::sqrt(2.0) - 1.0);
    for (std::size_t i = 0; i < S; ++i) {
        const double s_cur = sig[i];
        const double s_next = sig[i + 1];
        double gamma = 0.0;
        if (cfg.mode == SamplerMode::stochastic && s_cur >= cfg.s_tmin && s_cur <= cfg.s_tmax) gamma = gamma_max;
        double s_hat = s_cur;
        if (gamma > 0.0) {
            s_hat = s_cur * (1.0 + gamma);
            const double scale = std::sqrt(s_hat * s_hat - s_cur * s_cur) * cfg.s_noise;
            for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += scale * rng.normal();
        }
        const Vector d_cur = (x - D(x, s_hat)) / s_hat;
        Vector x_next = x + (s_next - s_hat) * d_cur;
        if (s_next > 0.0) {
            const Vector d_next = (x_next - D(x_next, s_next)) / s_next;
            x_next = x + (s_next - s_hat) * (0.5 * d_cur + 0.5 * d_next);
        }
        if (!x_next.allFinite()) {
            std::ostringstream msg;
            msg << "sampler: non-finite state at step " << i << " (sigma_hat=" << s_hat << ", sigma_next=" << s_next
                << ")";
            throw RuntimeFailure(msg.str());
        }
        x = std::move(x_next);
    }
    return x;
}

inline Vector initial_noise(std::size_t d, double sigma_max, Rng& rng) {
    Vector x(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = sigma_max * rng.normal();
    return x;
}

// One guided sample for a raw objective-space target, decoded to the box.
template <typename T>
DecisionVector sample_one(const DenoiserModel<T>& model, const Vector& target, const SamplerConfig& cfg, Rng& rng) {
    cfg.validate();
    require(static_cast<std::size_t>(target.size()) == model.m(), "sample_one: target has wrong dimension");
    const DenoiserFn D = [&](const Vector& x, double sigma) {
        return cfg_denoise(model, x, sigma, target, cfg.guidance_scale);
    };
    Vector x = initial_noise(model.d(), cfg.sigma_max, rng);
    x = sample_trajectory(D, std::move(x), cfg, rng);
    return model.scaling.decode_x(x);
}

// One sample per row of targets (raw objective space). Target q draws from
// the stream keyed by (seed, q), so results do not depend on visiting order.
template <typename T>
Matrix sample_batch(const DenoiserModel<T>& model, const Matrix& targets, const SamplerConfig& cfg) {
    cfg.validate();
    require(static_cast<std::size_t>(targets.cols()) == model.m(), "sample_batch: target dimension mismatch");
    Matrix X(targets.rows(), static_cast<Eigen::Index>(model.d()));
    for (Eigen::Index q = 0; q < targets.rows(); ++q) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(q));
        X.row(q) = sample_one(model, Vector(targets.row(q).transpose()), cfg, rng).transpose();
    }
    return X;
}

// Conditioning targets live in ideal/nadir-normalized space; map them back
// to raw objectives before handing them to the model.
template <typename T>
Matrix sample_batch(const DenoiserModel<T>& model, const ConditioningSet& cs, const NormalizationStats& stats,
                    const SamplerConfig& cfg) {
    Matrix raw(cs.targets.rows(), cs.targets.cols());
    for (Eigen::Index q = 0; q < raw.rows(); ++q) raw.row(q) = stats.denormalize(cs.targets.row(q)).transpose();
    return sample_batch(model, raw, cfg);
}

}  // namespace pcd
