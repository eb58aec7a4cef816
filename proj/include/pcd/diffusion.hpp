#pragma once

// Conditional EDM denoiser: residual MLP over [c_in * x, RFF(sigma),
// condition embedding], EDM preconditioning, reweighted denoising loss with
// classifier-free-guidance dropout, AdamW + cosine schedule, EMA, and a
// versioned checkpoint format. Gradients are computed by hand.
//
// The scalar type T is the network's storage/compute type: float for
// training runs, double for gradient checks. Data-facing values (decision
// vectors, objectives, sigma) stay double.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "pcd/core.hpp"
#include "pcd/dataset_io.hpp"
#include "pcd/reweighting.hpp"
#include "pcd/rng.hpp"

namespace pcd {

// How decision variables are mapped into the model's input space. Both maps
// are affine, so samples decode exactly and are then clipped to the box.
enum class XScaling { bounds, zscore };

inline XScaling parse_x_scaling(const std::string& s) {
    if (s == "bounds") return XScaling::bounds;
    if (s == "zscore") return XScaling::zscore;
    throw ContractError("unknown x scaling '" + s + "' (expected bounds|zscore)");
}

inline std::string to_string(XScaling s) { return s == XScaling::bounds ? "bounds" : "zscore"; }

struct DenoiserConfig {
    std::size_t width = 512;
    std::size_t depth = 4;  // residual hidden blocks after the input layer
    std::size_t rff_dim = 16;
    std::size_t cond_embed_dim = 32;
    double cfg_dropout_prob = 0.25;
    double sigma_data = 1.0;
    double p_mean = -1.2;
    double p_std = 1.2;
    double rff_scale = 1.0;  // std of the fixed Fourier frequencies
    XScaling x_scaling = XScaling::zscore;

    void validate() const {
        require(depth >= 1, "DenoiserConfig: depth must be >= 1");
        require(width >= 1 && rff_dim >= 1 && cond_embed_dim >= 1, "DenoiserConfig: sizes must be >= 1");
        require(cfg_dropout_prob >= 0.0 && cfg_dropout_prob < 1.0, "DenoiserConfig: cfg_dropout_prob must be in [0, 1)");
        require(sigma_data > 0.0, "DenoiserConfig: sigma_data must be > 0");
        require(p_std > 0.0, "DenoiserConfig: p_std must be > 0");
    }
};

struct TrainingConfig {
    std::size_t batch_size = 512;
    std::size_t max_steps = 12000;
    double learning_rate = 3e-4;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double ema_decay = 0.999;
    bool early_stop = true;
    double holdout_fraction = 0.1;
    std::size_t eval_interval = 100;
    std::size_t patience = 10;
    std::uint64_t seed = 0;

    void validate() const {
        require(batch_size >= 1, "TrainingConfig: batch_size must be >= 1");
        require(holdout_fraction > 0.0 && holdout_fraction <= 0.5, "TrainingConfig: holdout_fraction must be in (0, 0.5]");
        require(ema_decay >= 0.0 && ema_decay < 1.0, "TrainingConfig: ema_decay must be in [0, 1)");
        require(learning_rate > 0.0, "TrainingConfig: learning_rate must be > 0");
        require(eval_interval >= 1, "TrainingConfig: eval_interval must be >= 1");
    }
};

// EDM preconditioning coefficients.
struct Precond {
    double c_skip;
    double c_out;
    double c_in;
    double c_noise;
    double lambda;  // loss weight (sigma^2 + sd^2) / (sigma * sd)^2
};

inline Precond preconditioning(double sigma, double sigma_data) {
    const double s2 = sigma * sigma;
    const double d2 = sigma_data * sigma_data;
    return {d2 / (s2 + d2), sigma * sigma_data / std::sqrt(s2 + d2), 1.0 / std::sqrt(s2 + d2), std::log(sigma) / 4.0,
            (s2 + d2) / (s2 * d2)};
}

// [cos(2 pi f_k c_noise), sin(2 pi f_k c_noise)] with c_noise = ln(sigma) / 4.
template <class Freq>
Vector rff_embed(double sigma, const Freq& frequencies) {
    require(sigma > 0.0, "rff_embed: sigma must be > 0");
    const auto R = static_cast<Eigen::Index>(frequencies.size());
    const double c = std::log(sigma) / 4.0;
    Vector out(2 * R);
    for (Eigen::Index k = 0; k < R; ++k) {
        const double arg = 2.0 * std::numbers::pi * static_cast<double>(frequencies[k]) * c;
        out(k) = std::cos(arg);
        out(R + k) = std::sin(arg);
    }
    return out;
}

// Maps decision vectors to [-1, 1] via the box and objectives to z-scores.
struct DataScaling {
    Vector x_lower;
    Vector x_upper;
    Vector x_center;
    Vector x_scale;
    Vector y_mean;
    Vector y_std;

    Vector encode_x(const Vector& x) const { return ((x - x_center).array() / x_scale.array()).matrix(); }

    // Inverse of encode_x, clipped to the box.
    Vector decode_x(const Vector& s) const {
        Vector x = x_center + (s.array() * x_scale.array()).matrix();
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = std::clamp(x(j), x_lower(j), x_upper(j));
        return x;
    }

    Vector encode_y(const Vector& y) const { return ((y - y_mean).array() / y_std.array()).matrix(); }

    // bounds maps the box onto [-1, 1]; zscore gives each variable zero mean
    // and unit variance over the dataset. A constant column falls back to the
    // bounds map.
    static DataScaling from_dataset(const OfflineDataset& ds, XScaling mode = XScaling::zscore) {
        DataScaling s;
        s.x_lower = ds.lower_bounds;
        s.x_upper = ds.upper_bounds;
        const auto d = ds.X.cols();
        s.x_center.resize(d);
        s.x_scale.resize(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            const double half = 0.5 * (s.x_upper(j) - s.x_lower(j));
            s.x_center(j) = s.x_lower(j) + half;
            s.x_scale(j) = half > 0.0 ? half : 1.0;
            if (mode == XScaling::zscore) {
                const double sd = sample_std(ds.X.col(j));
                if (sd > 0.0) {
                    s.x_center(j) = ds.X.col(j).mean();
                    s.x_scale(j) = sd;
                }
            }
        }
        s.y_mean = ds.Y.colwise().mean().transpose();
        s.y_std.resize(ds.Y.cols());
        for (Eigen::Index j = 0; j < ds.Y.cols(); ++j) {
            const double sd = sample_std(ds.Y.col(j));
            s.y_std(j) = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

private:
    template <class Col>
    static double sample_std(const Col& c) {
        const double n = static_cast<double>(c.size());
        if (n <= 1.0) return 0.0;
        return std::sqrt((c.array() - c.mean()).square().sum() / (n - 1.0));
    }
};

// Offsets of every parameter block inside one flat buffer.
struct ParamLayout {
    std::size_t d = 0, m = 0, width = 0, depth = 0, rff = 0, embed = 0;
    std::size_t in_dim = 0;
    std::size_t w_cond = 0, b_cond = 0, null_emb = 0;
    std::size_t w_in = 0, b_in = 0;
    std::vector<std::size_t> w_h, b_h;
    std::size_t w_out = 0, b_out = 0;
    std::size_t total = 0;

    static ParamLayout make(std::size_t d, std::size_t m, const DenoiserConfig& cfg) {
        ParamLayout p;
        p.d = d;
        p.m = m;
        p.width = cfg.width;
        p.depth = cfg.depth;
        p.rff = cfg.rff_dim;
        p.embed = cfg.cond_embed_dim;
        p.in_dim = d + 2 * cfg.rff_dim + cfg.cond_embed_dim;
        std::size_t at = 0;
        auto take = [&](std::size_t n) {
            const std::size_t o = at;
            at += n;
            return o;
        };
        p.w_cond = take(p.embed * m);
        p.b_cond = take(p.embed);
        p.null_emb = take(p.embed);
        p.w_in = take(p.width * p.in_dim);
        p.b_in = take(p.width);
        for (std::size_t k = 0; k < p.depth; ++k) {
            p.w_h.push_back(take(p.width * p.width));
            p.b_h.push_back(take(p.width));
        }
        p.w_out = take(d * p.width);
        p.b_out = take(d);
        p.total = at;
        return p;
    }

    // Weight decay applies to the dense layer matrices only.
    std::vector<char> decay_mask() const {
        std::vector<char> mask(total, 0);
        auto mark = [&](std::size_t off, std::size_t n) { std::fill(mask.begin() + off, mask.begin() + off + n, 1); };
        mark(w_in, width * in_dim);
        for (std::size_t k = 0; k < depth; ++k) mark(w_h[k], width * width);
        mark(w_out, d * width);
        return mask;
    }
};

// Flat parameter storage. Eigen's vectorized kernels peel leading elements
// according to pointer alignment, so an aligned base keeps the summation
// order, and hence every rounding, identical across allocations.
template <typename T>
using ParamVector = std::vector<T, Eigen::aligned_allocator<T>>;

enum class ParamSet { live, ema };

template <typename T>
struct DenoiserModel {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    DenoiserConfig config;
    ParamLayout layout;
    ParamVector<T> params;
    ParamVector<T> ema;
    Vec rff_freq;
    DataScaling scaling;

    std::size_t d() const { return layout.d; }
    std::size_t m() const { return layout.m; }

    const ParamVector<T>& weights(ParamSet which) const { return which == ParamSet::ema ? ema : params; }

    // Dense layers use the uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) rule; the
    // output layer starts at zero so an untrained model returns c_skip * x.
    static DenoiserModel create(std::size_t d, std::size_t m, const DenoiserConfig& cfg, const DataScaling& scaling,
                                std::uint64_t seed) {
        cfg.validate();
        require(d >= 1 && m >= 1, "DenoiserModel: d and m must be >= 1");
        DenoiserModel model;
        model.config = cfg;
        model.layout = ParamLayout::make(d, m, cfg);
        model.scaling = scaling;
        const ParamLayout& L = model.layout;
        model.params.assign(L.total, T(0));
        Rng rng(seed, 0x1417);
        auto fill_uniform = [&](std::size_t off, std::size_t n, std::size_t fan_in) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (std::size_t i = 0; i < n; ++i) model.params[off + i] = static_cast<T>(rng.uniform(-bound, bound));
        };
        fill_uniform(L.w_cond, L.embed * m, m);
        fill_uniform(L.b_cond, L.embed, m);
        for (std::size_t i = 0; i < L.embed; ++i) model.params[L.null_emb + i] = static_cast<T>(rng.normal());
        fill_uniform(L.w_in, L.width * L.in_dim, L.in_dim);
        fill_uniform(L.b_in, L.width, L.in_dim);
        for (std::size_t k = 0; k < L.depth; ++k) {
            fill_uniform(L.w_h[k], L.width * L.width, L.width);
            fill_uniform(L.b_h[k], L.width, L.width);
        }
        model.ema = model.params;
        Rng frng(seed, 0xf4e9);
        model.rff_freq.resize(static_cast<Eigen::Index>(cfg.rff_dim));
        for (Eigen::Index k = 0; k < model.rff_freq.size(); ++k) {
            model.rff_freq(k) = static_cast<T>(cfg.rff_scale * frng.normal());
        }
        return model;
    }

    void check_compatible(std::size_t want_d, std::size_t want_m) const {
        if (want_d != d() || want_m != m()) {
            throw ContractError("model shape (d=" + std::to_string(d()) + ", m=" + std::to_string(m()) +
                                ") does not match task (d=" + std::to_string(want_d) + ", m=" + std::to_string(want_m) + ")");
        }
    }
};

// Activations kept for the backward pass.
template <typename T>
struct ForwardCache {
    using Mat = typename DenoiserModel<T>::Mat;
    using Vec = typename DenoiserModel<T>::Vec;
    Mat z;                  // m x B, z-scored conditions
    std::vector<char> dropped;
    Mat u;                  // in_dim x B
    std::vector<Mat> a;     // pre-activations: input layer then each block
    std::vector<Mat> h;     // h[0] after input layer, h[k+1] after block k
    Mat F;
    Mat D;
    Vec c_skip, c_out;
};

namespace detail {

template <typename T>
using ConstMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename T>
using MutMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using MutVecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;

}  // namespace detail

// Batched forward pass. x_noisy is d x B in the standardized space, z is the
// m x B matrix of z-scored conditions, dropped[b] selects the null embedding.
template <typename T>
void forward(const DenoiserModel<T>& model, const ParamVector<T>& w, const Eigen::MatrixXd& x_noisy,
             const std::vector<double>& sigmas, const Eigen::MatrixXd& z, const std::vector<char>& dropped,
             ForwardCache<T>& c) {
    using Mat = typename DenoiserModel<T>::Mat;
    const ParamLayout& L = model.layout;
    const auto B = static_cast<Eigen::Index>(sigmas.size());
    const auto d = static_cast<Eigen::Index>(L.d);
    const auto R = static_cast<Eigen::Index>(L.rff);
    const auto E = static_cast<Eigen::Index>(L.embed);
    const auto W = static_cast<Eigen::Index>(L.width);
    require(x_noisy.rows() == d && x_noisy.cols() == B, "denoiser: x shape mismatch");
    require(z.rows() == static_cast<Eigen::Index>(L.m) && z.cols() == B, "denoiser: condition shape mismatch");
    require(dropped.size() == sigmas.size(), "denoiser: drop mask size mismatch");

    c.z = z.cast<T>();
    c.dropped = dropped;
    c.c_skip.resize(B);
    c.c_out.resize(B);
    c.u.resize(static_cast<Eigen::Index>(L.in_dim), B);

    const detail::ConstMap<T> Wc(w.data() + L.w_cond, E, static_cast<Eigen::Index>(L.m));
    const detail::ConstVecMap<T> bc(w.data() + L.b_cond, E);
    const detail::ConstVecMap<T> null_emb(w.data() + L.null_emb, E);
    const Mat emb = (Wc * c.z).colwise() + bc;
    for (Eigen::Index b = 0; b < B; ++b) {
        const double sigma = sigmas[static_cast<std::size_t>(b)];
        require(sigma > 0.0, "denoiser: sigma must be > 0");
        const Precond pc = preconditioning(sigma, model.config.sigma_data);
        c.c_skip(b) = static_cast<T>(pc.c_skip);
        c.c_out(b) = static_cast<T>(pc.c_out);
        c.u.col(b).head(d) = (pc.c_in * x_noisy.col(b)).template cast<T>();
        const Vector r = rff_embed(sigma, model.rff_freq);
        c.u.col(b).segment(d, 2 * R) = r.template cast<T>();
        c.u.col(b).tail(E) = dropped[static_cast<std::size_t>(b)] ? Mat(null_emb) : Mat(emb.col(b));
    }

    c.a.resize(L.depth + 1);
    c.h.resize(L.depth + 1);
    const detail::ConstMap<T> Win(w.data() + L.w_in, W, static_cast<Eigen::Index>(L.in_dim));
    const detail::ConstVecMap<T> bin(w.data() + L.b_in, W);
    c.a[0].noalias() = Win * c.u;
    c.a[0].colwise() += bin;
    c.h[0] = c.a[0].cwiseMax(T(0));
    for (std::size_t k = 0; k < L.depth; ++k) {
        const detail::ConstMap<T> Wk(w.data() + L.w_h[k], W, W);
        const detail::ConstVecMap<T> bk(w.data() + L.b_h[k], W);
        c.a[k + 1].noalias() = Wk * c.h[k];
        c.a[k + 1].colwise() += bk;
        c.h[k + 1] = c.h[k] + c.a[k + 1].cwiseMax(T(0));
    }
    const detail::ConstMap<T> Wout(w.data() + L.w_out, d, W);
    const detail::ConstVecMap<T> bout(w.data() + L.b_out, d);
    c.F.noalias() = Wout * c.h[L.depth];
    c.F.colwise() += bout;
    const Mat xs = x_noisy.cast<T>();
    c.D = xs * c.c_skip.asDiagonal();
    c.D.noalias() += c.F * c.c_out.asDiagonal();
}

// Reverse pass from dL/dD to dL/dtheta (accumulated into grad).
template <typename T>
void backward(const DenoiserModel<T>& model, const ParamVector<T>& w, const ForwardCache<T>& c,
              const typename DenoiserModel<T>::Mat& gD, ParamVector<T>& grad) {
    using Mat = typename DenoiserModel<T>::Mat;
    const ParamLayout& L = model.layout;
    const auto d = static_cast<Eigen::Index>(L.d);
    const auto E = static_cast<Eigen::Index>(L.embed);
    const auto W = static_cast<Eigen::Index>(L.width);
    const Eigen::Index B = gD.cols();
    grad.assign(L.total, T(0));

    const Mat gF = gD * c.c_out.asDiagonal();
    detail::MutMap<T>(grad.data() + L.w_out, d, W).noalias() = gF * c.h[L.depth].transpose();
    detail::MutVecMap<T>(grad.data() + L.b_out, d) = gF.rowwise().sum();
    Mat gh = detail::ConstMap<T>(w.data() + L.w_out, d, W).transpose() * gF;

    for (std::size_t k = L.depth; k-- > 0;) {
        const Mat ga = (c.a[k + 1].array() > T(0)).select(gh, T(0));
        detail::MutMap<T>(grad.data() + L.w_h[k], W, W).noalias() = ga * c.h[k].transpose();
        detail::MutVecMap<T>(grad.data() + L.b_h[k], W) = ga.rowwise().sum();
        gh.noalias() += detail::ConstMap<T>(w.data() + L.w_h[k], W, W).transpose() * ga;
    }
    const Mat ga0 = (c.a[0].array() > T(0)).select(gh, T(0));
    const auto in_dim = static_cast<Eigen::Index>(L.in_dim);
    detail::MutMap<T>(grad.data() + L.w_in, W, in_dim).noalias() = ga0 * c.u.transpose();
    detail::MutVecMap<T>(grad.data() + L.b_in, W) = ga0.rowwise().sum();
    const Mat ge = (detail::ConstMap<T>(w.data() + L.w_in, W, in_dim).transpose() * ga0).bottomRows(E);

    Mat ge_cond = ge;
    detail::MutVecMap<T> gnull(grad.data() + L.null_emb, E);
    for (Eigen::Index b = 0; b < B; ++b) {
        if (c.dropped[static_cast<std::size_t>(b)]) {
            gnull += ge.col(b);
            ge_cond.col(b).setZero();
        }
    }
    detail::MutMap<T>(grad.data() + L.w_cond, E, static_cast<Eigen::Index>(L.m)).noalias() = ge_cond * c.z.transpose();
    detail::MutVecMap<T>(grad.data() + L.b_cond, E) = ge_cond.rowwise().sum();
}

// Single denoiser evaluation D(x; y, sigma). x_noisy is in the standardized
// decision space; condition is a raw objective vector, or absent for the
// unconditional (null-embedding) pass.
template <typename T>
Vector denoise(const DenoiserModel<T>& model, const Vector& x_noisy, double sigma,
               const std::optional<Vector>& condition, ParamSet which = ParamSet::ema) {
    require(static_cast<std::size_t>(x_noisy.size()) == model.d(), "denoise: x has wrong dimension");
    require(sigma > 0.0, "denoise: sigma must be > 0");
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.m()), 1);
    std::vector<char> dropped{1};
    if (condition) {
        require(static_cast<std::size_t>(condition->size()) == model.m(), "denoise: condition has wrong dimension");
        z.col(0) = model.scaling.encode_y(*condition);
        dropped[0] = 0;
    }
    ForwardCache<T> cache;
    forward(model, model.weights(which), Eigen::MatrixXd(x_noisy), {sigma}, z, dropped, cache);
    return cache.D.col(0).template cast<double>();
}

struct LossResult {
    double loss = 0.0;
    std::vector<double> grad;  // flat, same layout as the parameters
};

// One minibatch of the reweighted denoising objective
//   (1/B) sum_b w_b lambda(sigma_b) ||D(x_b + n_b; y_b or null, sigma_b) - x_b||^2.
// x is d x B (standardized), y_raw is m x B (raw objectives), noise is d x B
// and already scaled by sigma.
struct Batch {
    Eigen::MatrixXd x;
    Eigen::MatrixXd y_raw;
    std::vector<double> w;
};

template <typename T>
double loss_batch(const DenoiserModel<T>& model, const ParamVector<T>& params, const Batch& batch,
                  const std::vector<double>& sigmas, const Eigen::MatrixXd& noise, const std::vector<char>& drop_mask,
                  std::type_identity_t<ParamVector<T>>* grad) {
    const Eigen::Index B = batch.x.cols();
    require(static_cast<std::size_t>(B) == sigmas.size() && static_cast<std::size_t>(B) == batch.w.size(),
            "loss_batch: batch size mismatch");
    Eigen::MatrixXd z(batch.y_raw.rows(), B);
    for (Eigen::Index b = 0; b < B; ++b) z.col(b) = model.scaling.encode_y(batch.y_raw.col(b));
    ForwardCache<T> cache;
    const Eigen::MatrixXd x_noisy = batch.x + noise;
    forward(model, params, x_noisy, sigmas, z, drop_mask, cache);

    using Mat = typename DenoiserModel<T>::Mat;
    const Mat diff = cache.D - batch.x.template cast<T>();
    double loss = 0.0;
    Mat gD(diff.rows(), B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const double lam = preconditioning(sigmas[static_cast<std::size_t>(b)], model.config.sigma_data).lambda;
        const double coef = batch.w[static_cast<std::size_t>(b)] * lam / static_cast<double>(B);
        const double term = coef * static_cast<double>(diff.col(b).squaredNorm());
        if (!std::isfinite(term)) {
            std::ostringstream msg;
            msg << "loss_batch: non-finite loss at batch index " << b << " (sigma=" << sigmas[static_cast<std::size_t>(b)]
                << ", w=" << batch.w[static_cast<std::size_t>(b)] << ")";
            throw RuntimeFailure(msg.str());
        }
        loss += term;
        gD.col(b) = static_cast<T>(2.0 * coef) * diff.col(b);
    }
    if (grad) backward(model, params, cache, gD, *grad);
    return loss;
}

// Cosine annealing from base_lr at step 0 to 0 at max_steps.
inline double cosine_lr(double base_lr, std::size_t step, std::size_t max_steps) {
    if (max_steps == 0) return base_lr;
    const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(max_steps));
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * t));
}

// EMA decay with a short warm-up so the zero-initialized start does not
// linger in the shadow weights.
inline double ema_decay_at(double decay, std::size_t step) {
    const double warm = (1.0 + static_cast<double>(step)) / (10.0 + static_cast<double>(step));
    return std::min(decay, warm);
}

template <typename T>
void ema_update(ParamVector<T>& shadow, const ParamVector<T>& params, double decay) {
    const T a = static_cast<T>(decay);
    const T b = static_cast<T>(1.0 - decay);
    for (std::size_t i = 0; i < params.size(); ++i) shadow[i] = a * shadow[i] + b * params[i];
}

template <typename T>
class AdamW {
public:
    AdamW(std::size_t n, std::vector<char> decay_mask, const TrainingConfig& cfg)
        : m_(n, T(0)), v_(n, T(0)), mask_(std::move(decay_mask)), cfg_(cfg) {}

    void step(ParamVector<T>& params, const ParamVector<T>& grad, double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
        const T step_size = static_cast<T>(lr / bc1);
        const T inv_bc2 = static_cast<T>(1.0 / bc2);
        const T eps = static_cast<T>(cfg_.adam_eps);
        const T decay = static_cast<T>(1.0 - lr * cfg_.weight_decay);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1 * m_[i] + (T(1) - b1) * grad[i];
            v_[i] = b2 * v_[i] + (T(1) - b2) * grad[i] * grad[i];
            if (mask_[i]) params[i] *= decay;
            params[i] -= step_size * m_[i] / (std::sqrt(v_[i] * inv_bc2) + eps);
        }
    }

private:
    ParamVector<T> m_, v_;
    std::vector<char> mask_;
    TrainingConfig cfg_;
    std::size_t t_ = 0;
};

struct MetricRow {
    std::size_t step = 0;
    double train_loss = 0.0;
    double holdout_loss = std::numeric_limits<double>::quiet_NaN();
    double learning_rate = 0.0;
};

template <typename T>
struct TrainResult {
    DenoiserModel<T> model;
    std::vector<MetricRow> metrics;
    std::size_t steps_run = 0;
    double best_holdout = std::numeric_limits<double>::infinity();
    bool stopped_early = false;
};

namespace detail {

// Draws the per-sample randomness of one minibatch.
inline void draw_noise(const DenoiserConfig& cfg, std::size_t d, std::size_t B, Rng& rng, bool allow_drop,
                       std::vector<double>& sigmas, Eigen::MatrixXd& noise, std::vector<char>& drop) {
    sigmas.resize(B);
    drop.assign(B, 0);
    noise.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(B));
    for (std::size_t b = 0; b < B; ++b) {
        sigmas[b] = std::exp(cfg.p_mean + cfg.p_std * rng.normal());
        for (std::size_t j = 0; j < d; ++j) {
            noise(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) = sigmas[b] * rng.normal();
        }
        if (allow_drop) drop[b] = rng.bernoulli(cfg.cfg_dropout_prob) ? 1 : 0;
    }
}

inline Batch gather_batch(const Eigen::MatrixXd& xs, const Matrix& Y, const std::vector<double>& w, const IndexList& idx) {
    Batch b;
    b.x.resize(xs.rows(), static_cast<Eigen::Index>(idx.size()));
    b.y_raw.resize(Y.cols(), static_cast<Eigen::Index>(idx.size()));
    b.w.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        b.x.col(static_cast<Eigen::Index>(k)) = xs.col(static_cast<Eigen::Index>(idx[k]));
        b.y_raw.col(static_cast<Eigen::Index>(k)) = Y.row(static_cast<Eigen::Index>(idx[k])).transpose();
        b.w[k] = w[idx[k]];
    }
    return b;
}

}  // namespace detail

// Trains the denoiser on the weighted dataset. Minibatch indices are drawn
// uniformly from training samples with positive weight; the weight enters the
// loss. A fixed holdout split (with frozen noise draws) scores the EMA weights
// every eval_interval steps; the best EMA snapshot is returned.
template <typename T>
TrainResult<T> train(const OfflineDataset& data, const SampleWeights& weights, const DenoiserConfig& model_cfg,
                     const TrainingConfig& cfg) {
    cfg.validate();
    model_cfg.validate();
    data.validate();
    const std::size_t n = data.size();
    require(n >= 2, "train: need at least 2 samples");
    require(weights.w.size() == n, "train: weights size mismatch");

    const DataScaling scaling = DataScaling::from_dataset(data, model_cfg.x_scaling);
    TrainResult<T> out;
    out.model = DenoiserModel<T>::create(data.dim(), data.n_objectives(), model_cfg, scaling, cfg.seed);
    DenoiserModel<T>& model = out.model;

    Eigen::MatrixXd xs(static_cast<Eigen::Index>(data.dim()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        xs.col(static_cast<Eigen::Index>(i)) = scaling.encode_x(data.X.row(static_cast<Eigen::Index>(i)).transpose());
    }

    // Holdout split.
    Rng split_rng(cfg.seed, 0x5011);
    IndexList perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[split_rng.index(i + 1)]);
    const std::size_t n_hold =
        cfg.early_stop ? std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(cfg.holdout_fraction * static_cast<double>(n))), 1, n - 1) : 0;
    IndexList holdout(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
    IndexList trainable;
    for (std::size_t k = n_hold; k < n; ++k) {
        if (weights.w[perm[k]] > 0.0) trainable.push_back(perm[k]);
    }
    std::sort(trainable.begin(), trainable.end());
    if (trainable.empty()) throw RuntimeFailure("train: no training samples with positive weight");

    Batch hold_batch;
    std::vector<double> hold_sigmas;
    Eigen::MatrixXd hold_noise;
    std::vector<char> hold_drop;
    if (n_hold > 0) {
        hold_batch = detail::gather_batch(xs, data.Y, weights.w, holdout);
        Rng hold_rng(cfg.seed, 0x401d);
        detail::draw_noise(model_cfg, data.dim(), n_hold, hold_rng, false, hold_sigmas, hold_noise, hold_drop);
    }

    AdamW<T> opt(model.layout.total, model.layout.decay_mask(), cfg);
    Rng rng(cfg.seed, 0x7a1);
    ParamVector<T> grad;
    ParamVector<T> best_ema = model.ema;
    std::size_t since_best = 0;
    double window_loss = 0.0;
    std::size_t window_n = 0;
    std::vector<double> sigmas;
    Eigen::MatrixXd noise;
    std::vector<char> drop;
    IndexList idx(cfg.batch_size);

    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        for (auto& i : idx) i = trainable[rng.index(trainable.size())];
        const Batch batch = detail::gather_batch(xs, data.Y, weights.w, idx);
        detail::draw_noise(model_cfg, data.dim(), cfg.batch_size, rng, true, sigmas, noise, drop);
        double loss = 0.0;
        try {
            loss = loss_batch(model, model.params, batch, sigmas, noise, drop, &grad);
        } catch (const RuntimeFailure& e) {
            throw RuntimeFailure("train: diverged at step " + std::to_string(step) + ": " + e.what());
        }
        const double lr = cosine_lr(cfg.learning_rate, step, cfg.max_steps);
        opt.step(model.params, grad, lr);
        ema_update(model.ema, model.params, ema_decay_at(cfg.ema_decay, step));
        for (const T& p : model.params) {
            if (!std::isfinite(static_cast<double>(p))) {
                throw RuntimeFailure("train: non-finite parameter after step " + std::to_string(step) +
                                     " (lr=" + std::to_string(lr) + ", loss=" + std::to_string(loss) + ")");
            }
        }
        window_loss += loss;
        ++window_n;
        out.steps_run = step + 1;

        const bool last = step + 1 == cfg.max_steps;
        if ((step + 1) % cfg.eval_interval == 0 || last) {
            MetricRow row;
            row.step = step + 1;
            row.train_loss = window_loss / static_cast<double>(window_n);
            row.learning_rate = lr;
            window_loss = 0.0;
            window_n = 0;
            if (n_hold > 0) {
                row.holdout_loss = loss_batch(model, model.ema, hold_batch, hold_sigmas, hold_noise, hold_drop, nullptr);
                if (row.holdout_loss < out.best_holdout) {
                    out.best_holdout = row.holdout_loss;
                    best_ema = model.ema;
                    since_best = 0;
                } else {
                    ++since_best;
                }
            }
            out.metrics.push_back(row);
            if (n_hold > 0 && since_best >= cfg.patience) {
                out.stopped_early = !last;
                break;
            }
        }
    }
    if (n_hold > 0) model.ema = best_ema;
    return out;
}

// ---- checkpoints ---------------------------------------------------------
//
// "PCDM" | u32 version | u32 scalar bytes | u32 d | u32 m | u32 width |
// u32 depth | u32 rff_dim | u32 embed_dim | f64 dropout | f64 sigma_data |
// f64 p_mean | f64 p_std | f64 rff_scale | T rff[rff_dim] | u64 n_params |
// u32 x_scaling | T params[n] | T ema[n] | f64 x_lower[d] | f64 x_upper[d] |
// f64 x_center[d] | f64 x_scale[d] | f64 y_mean[m] | f64 y_std[m]

inline constexpr char kModelMagic[4] = {'P', 'C', 'D', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

template <typename T>
std::vector<char> encode_checkpoint(const DenoiserModel<T>& model) {
    io::Writer w;
    const ParamLayout& L = model.layout;
    w.bytes(kModelMagic, 4);
    w.pod<std::uint32_t>(kModelVersion);
    w.pod<std::uint32_t>(sizeof(T));
    for (std::size_t v : {L.d, L.m, L.width, L.depth, L.rff, L.embed}) w.pod<std::uint32_t>(static_cast<std::uint32_t>(v));
    const DenoiserConfig& c = model.config;
    for (double v : {c.cfg_dropout_prob, c.sigma_data, c.p_mean, c.p_std, c.rff_scale}) w.pod<double>(v);
    w.array(model.rff_freq.data(), static_cast<std::size_t>(model.rff_freq.size()));
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(c.x_scaling));
    w.pod<std::uint64_t>(model.params.size());
    w.array(model.params.data(), model.params.size());
    w.array(model.ema.data(), model.ema.size());
    w.array(model.scaling.x_lower.data(), L.d);
    w.array(model.scaling.x_upper.data(), L.d);
    w.array(model.scaling.x_center.data(), L.d);
    w.array(model.scaling.x_scale.data(), L.d);
    w.array(model.scaling.y_mean.data(), L.m);
    w.array(model.scaling.y_std.data(), L.m);
    return w.buffer();
}

template <typename T>
void save_checkpoint(const DenoiserModel<T>& model, const std::filesystem::path& path) {
    io::Writer w;
    const auto bytes = encode_checkpoint(model);
    w.bytes(bytes.data(), bytes.size());
    w.save(path);
}

template <typename T>
DenoiserModel<T> decode_checkpoint(io::Reader& r) {
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kModelMagic, 4) != 0) throw RuntimeFailure(r.what() + ": not a PCDM checkpoint (bad magic)");
    const auto version = r.pod<std::uint32_t>();
    if (version != kModelVersion) throw RuntimeFailure(r.what() + ": unsupported checkpoint version " + std::to_string(version));
    const auto scalar = r.pod<std::uint32_t>();
    if (scalar != sizeof(T)) {
        throw RuntimeFailure(r.what() + ": checkpoint stores " + std::to_string(scalar) + "-byte scalars, expected " +
                             std::to_string(sizeof(T)));
    }
    std::size_t dims[6];
    for (auto& v : dims) v = r.pod<std::uint32_t>();
    DenoiserConfig cfg;
    cfg.width = dims[2];
    cfg.depth = dims[3];
    cfg.rff_dim = dims[4];
    cfg.cond_embed_dim = dims[5];
    cfg.cfg_dropout_prob = r.pod<double>();
    cfg.sigma_data = r.pod<double>();
    cfg.p_mean = r.pod<double>();
    cfg.p_std = r.pod<double>();
    cfg.rff_scale = r.pod<double>();
    try {
        cfg.validate();
    } catch (const ContractError& e) {
        throw RuntimeFailure(r.what() + ": invalid model configuration: " + e.what());
    }
    if (dims[0] == 0 || dims[1] == 0) throw RuntimeFailure(r.what() + ": zero model dimensions");

    DenoiserModel<T> model;
    model.config = cfg;
    model.layout = ParamLayout::make(dims[0], dims[1], cfg);
    model.rff_freq.resize(static_cast<Eigen::Index>(cfg.rff_dim));
    r.array(model.rff_freq.data(), cfg.rff_dim);
    const auto xs = r.pod<std::uint32_t>();
    if (xs > 1) throw RuntimeFailure(r.what() + ": unknown x scaling code " + std::to_string(xs));
    model.config.x_scaling = static_cast<XScaling>(xs);
    const auto n = r.pod<std::uint64_t>();
    if (n != model.layout.total) {
        throw RuntimeFailure(r.what() + ": parameter count " + std::to_string(n) + " does not match architecture (" +
                             std::to_string(model.layout.total) + ")");
    }
    model.params.resize(n);
    model.ema.resize(n);
    r.array(model.params.data(), n);
    r.array(model.ema.data(), n);
    const auto d = static_cast<Eigen::Index>(dims[0]);
    const auto m = static_cast<Eigen::Index>(dims[1]);
    model.scaling.x_lower.resize(d);
    model.scaling.x_upper.resize(d);
    model.scaling.x_center.resize(d);
    model.scaling.x_scale.resize(d);
    model.scaling.y_mean.resize(m);
    model.scaling.y_std.resize(m);
    r.array(model.scaling.x_lower.data(), dims[0]);
    r.array(model.scaling.x_upper.data(), dims[0]);
    r.array(model.scaling.x_center.data(), dims[0]);
    r.array(model.scaling.x_scale.data(), dims[0]);
    r.array(model.scaling.y_mean.data(), dims[1]);
    r.array(model.scaling.y_std.data(), dims[1]);
    if (!r.at_end()) throw RuntimeFailure(r.what() + ": trailing bytes after checkpoint payload");
    return model;
}

template <typename T>
DenoiserModel<T> load_checkpoint(const std::filesystem::path& path) {
    io::Reader r = io::Reader::from_file(path);
    return decode_checkpoint<T>(r);
}

}  // namespace pcd
