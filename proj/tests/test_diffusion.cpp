#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pcd/diffusion.hpp"
#include "toy.hpp"

using pcd::Vector;

namespace {

pcd::DenoiserConfig small_config(std::size_t width = 8, std::size_t depth = 2) {
    pcd::DenoiserConfig c;
    c.width = width;
    c.depth = depth;
    c.rff_dim = 4;
    c.cond_embed_dim = 3;
    return c;
}

template <typename T>
pcd::DenoiserModel<T> small_model(std::size_t d, std::size_t m, std::uint64_t seed, std::size_t width = 8,
                                  std::size_t depth = 2) {
    return pcd::DenoiserModel<T>::create(d, m, small_config(width, depth), toy::unit_scaling(d, m), seed);
}

struct Draw {
    pcd::Batch batch;
    std::vector<double> sigmas;
    Eigen::MatrixXd noise;
    std::vector<char> drop;
};

Draw random_draw(std::size_t d, std::size_t m, std::size_t B, std::uint64_t seed, const pcd::DenoiserConfig& cfg) {
    pcd::Rng rng(seed);
    Draw r;
    r.batch.x.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(B));
    r.batch.y_raw.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(B));
    for (auto& v : r.batch.x.reshaped()) v = rng.uniform(-1, 1);
    for (auto& v : r.batch.y_raw.reshaped()) v = rng.normal();
    for (std::size_t b = 0; b < B; ++b) r.batch.w.push_back(rng.uniform(0.2, 2.0));
    pcd::detail::draw_noise(cfg, d, B, rng, true, r.sigmas, r.noise, r.drop);
    r.drop[0] = 1;
    r.drop[1] = 0;
    return r;
}

}  // namespace

TEST(Preconditioning, Algebra) {
    for (double s : {1e-3, 0.1, 1.0, 7.0, 80.0}) {
        const auto p = pcd::preconditioning(s, 1.0);
        EXPECT_NEAR(p.lambda * p.c_out * p.c_out, 1.0, 1e-12);
        EXPECT_NEAR(p.c_skip + (s * s) / (s * s + 1.0), 1.0, 1e-15);
        EXPECT_DOUBLE_EQ(p.c_noise, std::log(s) / 4);
    }
    const auto tiny = pcd::preconditioning(1e-9, 1.0);
    EXPECT_NEAR(tiny.c_skip, 1.0, 1e-15);
    EXPECT_NEAR(tiny.c_out, 0.0, 1e-8);
}

TEST(RffEmbed, Examples) {
    const Vector f{{0.3, -1.2, 2.0}};
    const Vector e1 = pcd::rff_embed(1.0, f);
    EXPECT_EQ(e1, (Vector{{1, 1, 1, 0, 0, 0}}));
    for (double s : {1e-3, 0.5, 3.0, 80.0}) {
        const Vector e = pcd::rff_embed(s, f);
        EXPECT_LE(e.cwiseAbs().maxCoeff(), 1.0);
    }
    EXPECT_THROW(pcd::rff_embed(0.0, f), pcd::ContractError);
    EXPECT_THROW(pcd::rff_embed(-1.0, f), pcd::ContractError);
    const auto a = small_model<float>(2, 1, 77), b = small_model<float>(2, 1, 77);
    EXPECT_EQ(a.rff_freq, b.rff_freq);
}

TEST(Denoise, UntrainedModelReturnsSkipTerm) {
    const auto model = small_model<double>(3, 2, 1);
    const Vector x{{0.3, -0.7, 1.5}};
    for (double s : {0.01, 0.5, 2.0, 40.0}) {
        const Vector D = pcd::denoise(model, x, s, Vector{{0.2, -1.0}});
        const double cs = pcd::preconditioning(s, 1.0).c_skip;
        for (Eigen::Index j = 0; j < 3; ++j) EXPECT_EQ(D(j), cs * x(j));
    }
}

TEST(Denoise, AbsentConditionEqualsNullEmbedding) {
    auto model = small_model<double>(3, 2, 2);
    toy::randomize(model, 5);
    const Vector x{{0.3, -0.7, 1.5}};
    const Vector uncond = pcd::denoise(model, x, 0.8, std::nullopt);
    pcd::ForwardCache<double> cache;
    pcd::forward(model, model.ema, Eigen::MatrixXd(x), {0.8}, Eigen::MatrixXd::Constant(2, 1, 123.0), {1}, cache);
    EXPECT_EQ(Vector(cache.D.col(0)), uncond);
    EXPECT_NE(pcd::denoise(model, x, 0.8, Vector{{0.0, 0.0}}), uncond);
}

TEST(Denoise, SmallSigmaApproachesIdentity) {
    auto model = small_model<double>(4, 2, 3);
    toy::randomize(model, 6);
    const Vector x{{0.1, 0.2, -0.3, 0.9}};
    EXPECT_LT((pcd::denoise(model, x, 1e-6, Vector{{1.0, 2.0}}) - x).norm(), 1e-4);
}

TEST(Denoise, ShapeErrors) {
    const auto model = small_model<double>(3, 2, 1);
    EXPECT_THROW(pcd::denoise(model, Vector::Zero(2), 1.0, std::nullopt), pcd::ContractError);
    EXPECT_THROW(pcd::denoise(model, Vector::Zero(3), 1.0, Vector::Zero(3)), pcd::ContractError);
    EXPECT_THROW(pcd::denoise(model, Vector::Zero(3), 0.0, std::nullopt), pcd::ContractError);
}

TEST(LossBatch, MatchesPerSampleDenoiserOracle) {
    auto model = small_model<double>(3, 2, 4);
    toy::randomize(model, 8);
    const auto r = random_draw(3, 2, 6, 10, model.config);
    const double loss = pcd::loss_batch(model, model.params, r.batch, r.sigmas, r.noise, r.drop, nullptr);
    double want = 0;
    for (Eigen::Index b = 0; b < 6; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        const std::optional<Vector> cond =
            r.drop[bi] ? std::nullopt : std::optional<Vector>(r.batch.y_raw.col(b));
        const Vector D = pcd::denoise(model, Vector(r.batch.x.col(b) + r.noise.col(b)), r.sigmas[bi], cond,
                                      pcd::ParamSet::live);
        want += r.batch.w[bi] * pcd::preconditioning(r.sigmas[bi], 1.0).lambda * (D - r.batch.x.col(b)).squaredNorm();
    }
    EXPECT_NEAR(loss, want / 6.0, 1e-12 * want);
}

TEST(LossBatch, DoublingWeightsDoublesLossAndGradients) {
    auto model = small_model<double>(3, 2, 4);
    toy::randomize(model, 9);
    auto r = random_draw(3, 2, 5, 11, model.config);
    pcd::ParamVector<double> g1, g2;
    const double l1 = pcd::loss_batch(model, model.params, r.batch, r.sigmas, r.noise, r.drop, &g1);
    for (double& w : r.batch.w) w *= 2;
    const double l2 = pcd::loss_batch(model, model.params, r.batch, r.sigmas, r.noise, r.drop, &g2);
    EXPECT_DOUBLE_EQ(l2, 2 * l1);
    for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_DOUBLE_EQ(g2[i], 2 * g1[i]);
}

TEST(LossBatch, NonFiniteLossReportsDiagnostics) {
    auto model = small_model<double>(2, 1, 4);
    toy::randomize(model, 9);
    auto r = random_draw(2, 1, 3, 12, model.config);
    r.batch.w[1] = std::numeric_limits<double>::infinity();
    try {
        pcd::loss_batch(model, model.params, r.batch, r.sigmas, r.noise, r.drop, nullptr);
        FAIL() << "expected failure";
    } catch (const pcd::RuntimeFailure& e) {
        EXPECT_NE(std::string(e.what()).find("batch index 1"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("sigma="), std::string::npos);
    }
}

TEST(LossBatch, GradientMatchesCentralDifferences) {
    double worst = 0;
    for (std::uint64_t t = 0; t < 6; ++t) {
        const std::size_t d = 1 + t % 4, m = 1 + t % 3;
        auto model = small_model<double>(d, m, t, 8, 1 + t % 2);
        toy::randomize(model, 100 + t);
        const auto r = random_draw(d, m, 4, 200 + t, model.config);
        pcd::ParamVector<double> g;
        pcd::loss_batch(model, model.params, r.batch, r.sigmas, r.noise, r.drop, &g);
        for (std::size_t i = 0; i < model.params.size(); ++i) {
            auto p = model.params;
            p[i] += 1e-5;
            const double up = pcd::loss_batch(model, p, r.batch, r.sigmas, r.noise, r.drop, nullptr);
            p[i] -= 2e-5;
            const double dn = pcd::loss_batch(model, p, r.batch, r.sigmas, r.noise, r.drop, nullptr);
            const double fd = (up - dn) / 2e-5;
            const double rel = std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(Training, DropoutRateNearConfigured) {
    pcd::DenoiserConfig cfg;
    pcd::Rng rng(3);
    std::vector<double> s;
    Eigen::MatrixXd n;
    std::vector<char> drop;
    pcd::detail::draw_noise(cfg, 1, 100000, rng, true, s, n, drop);
    double k = 0;
    for (char c : drop) k += c;
    const double sd = std::sqrt(100000 * 0.25 * 0.75);
    EXPECT_LE(std::abs(k - 25000), 3 * sd);
    double mean_log = 0;
    for (double v : s) mean_log += std::log(v);
    EXPECT_NEAR(mean_log / 100000, -1.2, 0.02);
}

TEST(Training, EmaUpdateIsConvexAndZeroDecayCopies) {
    pcd::ParamVector<float> shadow{1.f, -2.f, 3.f}, params{0.f, 5.f, 3.5f};
    auto prev = shadow;
    pcd::ema_update(shadow, params, 0.9);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_GE(shadow[i], std::min(prev[i], params[i]));
        EXPECT_LE(shadow[i], std::max(prev[i], params[i]));
    }
    pcd::ema_update(shadow, params, 0.0);
    EXPECT_EQ(shadow, params);
    EXPECT_EQ(pcd::ema_decay_at(0.0, 50), 0.0);
    EXPECT_EQ(pcd::ema_decay_at(0.999, 100000), 0.999);
}

TEST(Training, CosineScheduleEndpointsAndMonotone) {
    EXPECT_DOUBLE_EQ(pcd::cosine_lr(3e-4, 0, 1000), 3e-4);
    EXPECT_NEAR(pcd::cosine_lr(3e-4, 1000, 1000), 0.0, 1e-20);
    double prev = 1;
    for (std::size_t s = 0; s <= 1000; ++s) {
        const double lr = pcd::cosine_lr(3e-4, s, 1000);
        EXPECT_LE(lr, prev);
        prev = lr;
    }
}

TEST(Training, CircleHoldoutLossHalves) {
    const auto ds = toy::circle(2000, 1);
    pcd::TrainingConfig tc;
    tc.batch_size = 128;
    tc.max_steps = 2000;
    tc.eval_interval = 50;
    tc.patience = 1000;
    tc.seed = 3;
    pcd::DenoiserConfig mc;
    mc.width = 128;
    mc.depth = 2;
    const auto res = pcd::train<float>(ds, pcd::uniform_weights(ds.size()), mc, tc);
    ASSERT_GE(res.metrics.size(), 2u);
    EXPECT_EQ(res.metrics.front().step, 50u);
    EXPECT_LE(res.best_holdout, 0.5 * res.metrics.front().holdout_loss);
    for (const auto& row : res.metrics) EXPECT_TRUE(std::isfinite(row.train_loss));
}

TEST(Training, DeterministicForFixedSeed) {
    const auto ds = toy::circle(300, 2);
    pcd::TrainingConfig tc;
    tc.batch_size = 32;
    tc.max_steps = 150;
    tc.eval_interval = 50;
    tc.seed = 4;
    const auto a = pcd::train<float>(ds, pcd::uniform_weights(ds.size()), small_config(16), tc);
    const auto b = pcd::train<float>(ds, pcd::uniform_weights(ds.size()), small_config(16), tc);
    ASSERT_EQ(a.metrics.size(), b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        EXPECT_EQ(a.metrics[i].train_loss, b.metrics[i].train_loss);
        EXPECT_EQ(a.metrics[i].holdout_loss, b.metrics[i].holdout_loss);
    }
    EXPECT_EQ(a.model.ema, b.model.ema);
}

TEST(Training, ZeroWeightSamplesNeverDrawn) {
    const auto ds = toy::circle(200, 2);
    auto w = pcd::uniform_weights(ds.size());
    for (auto& v : w.w) v = 0;
    pcd::TrainingConfig tc;
    tc.max_steps = 5;
    EXPECT_THROW(pcd::train<float>(ds, w, small_config(), tc), pcd::RuntimeFailure);
}

namespace {

std::filesystem::path ckpt_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "pcd_ckpt_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
    auto model = small_model<float>(3, 2, 5);
    toy::randomize(model, 7);
    model.ema[0] = 42.f;
    model.scaling.y_mean = Vector{{0.1, 0.2}};
    const auto p = ckpt_path("round.pcdm");
    pcd::save_checkpoint(model, p);
    const auto back = pcd::load_checkpoint<float>(p);
    EXPECT_EQ(back.params, model.params);
    EXPECT_EQ(back.ema, model.ema);
    EXPECT_EQ(back.rff_freq, model.rff_freq);
    EXPECT_EQ(back.scaling.y_mean, model.scaling.y_mean);
    EXPECT_EQ(back.scaling.x_upper, model.scaling.x_upper);
    EXPECT_EQ(back.scaling.x_scale, model.scaling.x_scale);
    EXPECT_EQ(back.config.x_scaling, model.config.x_scaling);
    EXPECT_EQ(pcd::encode_checkpoint(back), pcd::encode_checkpoint(model));
}

TEST(Checkpoint, CorruptionAndMismatchRejected) {
    const auto model = small_model<float>(3, 2, 5);
    auto bytes = pcd::encode_checkpoint(model);
    bytes[1] = 'Z';
    pcd::io::Reader r1(bytes, "bad");
    EXPECT_THROW(pcd::decode_checkpoint<float>(r1), pcd::RuntimeFailure);

    auto good = pcd::encode_checkpoint(model);
    good.resize(good.size() - 1);
    pcd::io::Reader r2(good, "trunc");
    EXPECT_THROW(pcd::decode_checkpoint<float>(r2), pcd::RuntimeFailure);

    auto as_float = pcd::encode_checkpoint(model);
    pcd::io::Reader r3(as_float, "scalar");
    EXPECT_THROW(pcd::decode_checkpoint<double>(r3), pcd::RuntimeFailure);

    EXPECT_THROW(model.check_compatible(3, 3), pcd::ContractError);
    EXPECT_NO_THROW(model.check_compatible(3, 2));
}
