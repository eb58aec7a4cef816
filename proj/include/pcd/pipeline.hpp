#pragma once

// End-to-end commands: dataset generation, training, sampling, evaluation,
// the full train-condition-sample-evaluate run over several seeds, and
// one-axis ablation sweeps. Results are written as JSON and CSV.

#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pcd/benchmarks.hpp"
#include "pcd/conditioning.hpp"
#include "pcd/config.hpp"
#include "pcd/core.hpp"
#include "pcd/dataset_io.hpp"
#include "pcd/diffusion.hpp"
#include "pcd/indicators.hpp"
#include "pcd/refdirs.hpp"
#include "pcd/reweighting.hpp"
#include "pcd/sampler.hpp"

namespace pcd {

inline constexpr int kResultSchemaVersion = 1;

// A failure inside one pipeline phase, tagged with the phase name and seed.
class PhaseError : public RuntimeFailure {
public:
    PhaseError(std::string phase, std::size_t seed_index, const std::string& what)
        : RuntimeFailure("[" + phase + (seed_index == npos ? "" : " seed " + std::to_string(seed_index)) + "] " + what),
          phase_(std::move(phase)),
          seed_index_(seed_index) {}

    const std::string& phase() const { return phase_; }
    std::size_t seed_index() const { return seed_index_; }

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

private:
    std::string phase_;
    std::size_t seed_index_;
};

using Timings = std::map<std::string, double>;

namespace detail {

// Runs f as the named phase: records wall-clock seconds and tags failures.
template <class F>
auto timed_phase(const std::string& phase, std::size_t seed_index, Timings& t, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto record = [&] { t[phase] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            record();
        } else {
            auto r = f();
            record();
            return r;
        }
    } catch (const PhaseError&) {
        throw;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw PhaseError(phase, seed_index, e.what());
    }
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
inline double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline std::string percentile_key(double p) { return fmt_double(p); }

}  // namespace detail

// ---- shared data preparation ---------------------------------------------

struct PreparedData {
    TaskSpec task;
    OfflineDataset ds;
    NormalizationStats stats;
    FrontPartition fronts;
    SampleWeights weights;
};

inline TaskSpec task_from_config(const RunConfig& c) {
    return detail::as_config_error("task", [&] { return make_task(c.task.name, c.task.d, c.task.m); });
}

inline OfflineDataset obtain_dataset(const RunConfig& c, const TaskSpec& task) {
    if (c.task.dataset.empty()) return generate_offline_dataset(task, c.task.size, c.task.seed, c.task.strategy);
    OfflineDataset ds = load_dataset(c.task.dataset);
    if (ds.task_name != task.name || ds.dim() != task.d || ds.n_objectives() != task.m) {
        throw ConfigError("task.dataset: file holds " + ds.task_name + " (d=" + std::to_string(ds.dim()) +
                          ", m=" + std::to_string(ds.n_objectives()) + ") but the config selects " + task.name +
                          " (d=" + std::to_string(task.d) + ", m=" + std::to_string(task.m) + ")");
    }
    return ds;
}

inline SampleWeights sample_weights(const RunConfig& c, const OfflineDataset& ds, const FrontPartition& fronts) {
    switch (c.reweight.mode) {
        case ReweightMode::none: return uniform_weights(ds.size());
        case ReweightMode::prune: return prune_weights(fronts, c.reweight.keep_fraction);
        case ReweightMode::reweight:
            return compute_weights(ds.Y, build_grid(ds.Y, c.reweight.bins), dominance_numbers(ds.Y), c.reweight.K,
                                   c.reweight.tau);
    }
    return uniform_weights(ds.size());
}

inline PreparedData prepare_data(const RunConfig& c, Timings& t) {
    PreparedData p;
    p.task = task_from_config(c);
    detail::timed_phase("data", PhaseError::npos, t, [&] {
        p.ds = obtain_dataset(c, p.task);
        p.stats = compute_normalization(p.ds);
        p.fronts = non_dominated_sort(p.ds.Y);
    });
    detail::timed_phase("reweight", PhaseError::npos, t, [&] { p.weights = sample_weights(c, p.ds, p.fronts); });
    return p;
}

// Hypervolume at each requested percentile, in ideal/nadir-normalized space.
inline std::map<std::string, double> percentile_hv(const Matrix& Y, const NormalizationStats& stats,
                                                   const std::vector<double>& percentiles, double ref_multiplier) {
    const Matrix Yn = stats.normalize_rows(Y);
    const Vector ref = Vector::Constant(Yn.cols(), ref_multiplier);
    std::map<std::string, double> out;
    for (double p : percentiles) {
        out[detail::percentile_key(p)] = hypervolume_exact(select_rows(Yn, percentile_filter(Yn, p)), ref);
    }
    return out;
}

// ---- per-seed run ----------------------------------------------------------

struct SeedResult {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    Matrix X;
    Matrix Y;
    ConditioningSet conditioning;
    HvReport report;
    std::map<std::string, double> hv;  // keyed by percentile
    double relative_improvement = 0.0;
    std::size_t oracle_calls = 0;
    std::size_t train_steps = 0;
    double best_holdout = 0.0;
    bool stopped_early = false;
    std::vector<MetricRow> metrics;
    Timings timings;
};

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;
};

struct RunResult {
    RunConfig config;
    std::string status = "ok";
    std::string failed_phase;
    std::string error;
    std::string task_name;
    std::size_t d = 0;
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t front_size = 0;
    double weight_cv = 0.0;
    HvReport dbest;
    std::vector<SeedResult> seeds;
    std::map<std::string, Aggregate> aggregate;
    Timings timings;
};

// Trained models shared across ablation grid points that differ only in
// settings downstream of training.
class ModelCache {
public:
    using Entry = std::variant<TrainResult<float>, TrainResult<double>>;

    std::shared_ptr<const Entry> find(const std::string& key) {
        std::lock_guard<std::mutex> lock(mu_);
        const auto it = map_.find(key);
        return it == map_.end() ? nullptr : it->second;
    }
    void put(const std::string& key, std::shared_ptr<const Entry> e) {
        std::lock_guard<std::mutex> lock(mu_);
        map_[key] = std::move(e);
    }

private:
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<const Entry>> map_;
};

inline std::uint64_t run_seed_value(const RunConfig& c, std::size_t k) { return stream_seed(c.eval.seed, k); }

inline std::string training_key(const RunConfig& c, std::size_t k) {
    std::string key = "seed=" + std::to_string(k) + ";eval.seed=" + std::to_string(c.eval.seed);
    for (const auto& [name, value] : c.snapshot()) {
        if (name.starts_with("task.") || name.starts_with("reweight.") || name.starts_with("model.") ||
            name.starts_with("train.")) {
            key += ";" + name + "=" + value;
        }
    }
    return key;
}

template <typename T>
std::shared_ptr<const ModelCache::Entry> train_for_seed(const RunConfig& c, const PreparedData& p, std::size_t k,
                                                        ModelCache* cache) {
    const std::string key = cache ? training_key(c, k) : std::string();
    if (cache) {
        if (auto hit = cache->find(key)) return hit;
    }
    TrainingConfig tc = c.train;
    tc.seed = run_seed_value(c, k);
    auto e = std::make_shared<const ModelCache::Entry>(train<T>(p.ds, p.weights, c.model, tc));
    if (cache) cache->put(key, e);
    return e;
}

inline ConditioningSet conditioning_for_seed(const RunConfig& c, const PreparedData& p, std::uint64_t seed) {
    const ReferenceDirections dirs = make_directions(c.cond.refdir_method, p.task.m, c.cond.L, seed);
    ConditioningParams cp;
    cp.J = c.cond.J;
    cp.Q = c.cond.Q;
    cp.distance = c.cond.distance;
    cp.noise_sigma = c.cond.noise_sigma;
    cp.seed = seed;
    cp.strategy = c.cond.strategy;
    return generate_conditioning_set(p.ds.Y, p.stats, dirs, cp);
}

template <typename T>
SeedResult run_one_seed(const RunConfig& c, const PreparedData& p, std::size_t k, ModelCache* cache) {
    SeedResult r;
    r.index = k;
    r.seed = run_seed_value(c, k);
    // The true evaluator exists for the whole seed so that any call outside
    // the evaluation phase would show up in the count.
    CountingOracle oracle(p.task);

    const auto entry = detail::timed_phase("train", k, r.timings, [&] { return train_for_seed<T>(c, p, k, cache); });
    const auto& trained = std::get<TrainResult<T>>(*entry);
    r.train_steps = trained.steps_run;
    r.best_holdout = trained.best_holdout;
    r.stopped_early = trained.stopped_early;
    r.metrics = trained.metrics;

    r.conditioning = detail::timed_phase("condition", k, r.timings, [&] { return conditioning_for_seed(c, p, r.seed); });

    r.X = detail::timed_phase("sample", k, r.timings, [&] {
        SamplerConfig sc = c.sampler;
        sc.seed = r.seed;
        return sample_batch(trained.model, r.conditioning, p.stats, sc);
    });

    detail::timed_phase("evaluate", k, r.timings, [&] {
        if (oracle.calls() != 0) throw RuntimeFailure("oracle queried before evaluation");
        r.Y = oracle.evaluate(r.X);
        r.oracle_calls = oracle.calls();
        if (r.oracle_calls != c.cond.Q) {
            throw RuntimeFailure("oracle budget violated: " + std::to_string(r.oracle_calls) + " calls for Q=" +
                                 std::to_string(c.cond.Q));
        }
        r.report = evaluate_run(r.Y, p.stats, c.eval.ref_multiplier);
        r.hv = percentile_hv(r.Y, p.stats, c.eval.percentiles, c.eval.ref_multiplier);
    });
    return r;
}

inline void finalize_aggregate(RunResult& res) {
    std::vector<double> h100, h75, h50, rel;
    for (auto& s : res.seeds) {
        s.relative_improvement = res.dbest.hv_100 > 0.0 ? s.report.hv_100 / res.dbest.hv_100 : 0.0;
        h100.push_back(s.report.hv_100);
        h75.push_back(s.report.hv_75);
        h50.push_back(s.report.hv_50);
        rel.push_back(s.relative_improvement);
    }
    res.aggregate.clear();
    res.aggregate["hv_100"] = {detail::mean_of(h100), detail::std_of(h100)};
    res.aggregate["hv_75"] = {detail::mean_of(h75), detail::std_of(h75)};
    res.aggregate["hv_50"] = {detail::mean_of(h50), detail::std_of(h50)};
    res.aggregate["relative_improvement"] = {detail::mean_of(rel), detail::std_of(rel)};
    if (!res.seeds.empty()) {
        for (const auto& [key, unused] : res.seeds.front().hv) {
            std::vector<double> v;
            for (const auto& s : res.seeds) v.push_back(s.hv.at(key));
            res.aggregate["hv@" + key] = {detail::mean_of(v), detail::std_of(v)};
        }
    }
}

// ---- serialization ---------------------------------------------------------

inline nlohmann::ordered_json matrix_json(const Matrix& M) {
    auto a = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        a.push_back(std::move(row));
    }
    return a;
}

inline nlohmann::ordered_json hv_report_json(const HvReport& r) {
    nlohmann::ordered_json j;
    j["hv_100"] = r.hv_100;
    j["hv_75"] = r.hv_75;
    j["hv_50"] = r.hv_50;
    j["n_100"] = r.n_100;
    j["n_75"] = r.n_75;
    j["n_50"] = r.n_50;
    j["reference_point"] = std::vector<double>(r.reference_point.data(), r.reference_point.data() + r.reference_point.size());
    return j;
}

inline nlohmann::ordered_json config_json(const RunConfig& c) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : c.snapshot()) j[k] = v;
    return j;
}

inline nlohmann::ordered_json result_json(const RunResult& res) {
    nlohmann::ordered_json j;
    j["schema_version"] = kResultSchemaVersion;
    j["status"] = res.status;
    if (res.status != "ok") {
        j["failed_phase"] = res.failed_phase;
        j["error"] = res.error;
    }
    j["config"] = config_json(res.config);
    j["task"] = {{"name", res.task_name}, {"d", res.d}, {"m", res.m}};
    j["dataset"] = {{"n", res.n}, {"front_size", res.front_size}, {"weight_cv", res.weight_cv}};
    j["dbest"] = hv_report_json(res.dbest);
    auto seeds = nlohmann::ordered_json::array();
    for (const auto& s : res.seeds) {
        nlohmann::ordered_json js;
        js["index"] = s.index;
        js["seed"] = s.seed;
        js["hv_report"] = hv_report_json(s.report);
        js["hv"] = s.hv;
        js["relative_improvement"] = s.relative_improvement;
        js["oracle_calls"] = s.oracle_calls;
        js["train"] = {{"steps_run", s.train_steps},
                       {"best_holdout", std::isfinite(s.best_holdout) ? nlohmann::ordered_json(s.best_holdout) : nullptr},
                       {"stopped_early", s.stopped_early}};
        js["X"] = matrix_json(s.X);
        js["Y"] = matrix_json(s.Y);
        seeds.push_back(std::move(js));
    }
    j["seeds"] = std::move(seeds);
    nlohmann::ordered_json agg;
    for (const auto& [k, a] : res.aggregate) agg[k] = {{"mean", a.mean}, {"std", a.std}};
    j["aggregate"] = std::move(agg);
    nlohmann::ordered_json t;
    t["total"] = res.timings;
    auto per_seed = nlohmann::ordered_json::array();
    for (const auto& s : res.seeds) per_seed.push_back(s.timings);
    t["per_seed"] = std::move(per_seed);
    j["timings"] = std::move(t);
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw RuntimeFailure("write failed for '" + path.string() + "'");
}

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw RuntimeFailure("cannot create output directory '" + dir.string() + "'");
    }
}

// Generated rows with their conditioning provenance, one block per seed.
inline void write_front_csv(const std::filesystem::path& path, const std::vector<SeedResult>& seeds) {
    if (seeds.empty()) return;
    const auto d = static_cast<std::size_t>(seeds.front().X.cols());
    const auto m = static_cast<std::size_t>(seeds.front().conditioning.targets.cols());
    std::vector<std::string> header{"seed", "q"};
    for (const auto& h : prefixed("x", d)) header.push_back(h);
    if (seeds.front().Y.size()) for (const auto& h : prefixed("y", m)) header.push_back(h);
    for (const auto& h : prefixed("t", m)) header.push_back(h);
    header.push_back("source");
    header.push_back("direction");
    std::vector<std::vector<double>> cols(header.size());
    for (const auto& s : seeds) {
        for (Eigen::Index q = 0; q < s.X.rows(); ++q) {
            std::size_t c = 0;
            cols[c++].push_back(static_cast<double>(s.index));
            cols[c++].push_back(static_cast<double>(q));
            for (Eigen::Index j = 0; j < s.X.cols(); ++j) cols[c++].push_back(s.X(q, j));
            for (Eigen::Index j = 0; j < s.Y.cols(); ++j) cols[c++].push_back(s.Y(q, j));
            for (Eigen::Index j = 0; j < s.conditioning.targets.cols(); ++j) cols[c++].push_back(s.conditioning.targets(q, j));
            const auto& pr = s.conditioning.provenance[static_cast<std::size_t>(q)];
            cols[c++].push_back(static_cast<double>(pr.source));
            cols[c++].push_back(pr.direction == TargetProvenance::npos ? -1.0 : static_cast<double>(pr.direction));
        }
    }
    write_csv(path, header, cols);
}

inline void write_metrics_csv(const std::filesystem::path& path, const std::vector<SeedResult>& seeds) {
    std::vector<std::vector<double>> cols(5);
    for (const auto& s : seeds) {
        for (const auto& row : s.metrics) {
            cols[0].push_back(static_cast<double>(s.index));
            cols[1].push_back(static_cast<double>(row.step));
            cols[2].push_back(row.train_loss);
            cols[3].push_back(row.holdout_loss);
            cols[4].push_back(row.learning_rate);
        }
    }
    write_csv(path, {"seed", "step", "train_loss", "holdout_loss", "learning_rate"}, cols);
}

inline void write_run_artifacts(const RunResult& res, const std::filesystem::path& out) {
    ensure_dir(out);
    write_text(out / "result.json", result_json(res).dump(2) + "\n");
    write_text(out / "config.txt", res.config.to_text());
    write_front_csv(out / "front.csv", res.seeds);
    write_metrics_csv(out / "metrics.csv", res.seeds);
}

// ---- commands --------------------------------------------------------------

struct DominanceSummary {
    std::size_t min = 0;
    double median = 0.0;
    std::size_t max = 0;
    std::vector<std::size_t> histogram;  // counts over normalized dominance in [0, 1]
};

inline DominanceSummary summarize_dominance(const DominanceStats& dom, std::size_t bins = 10) {
    DominanceSummary s;
    std::vector<std::size_t> c = dom.counts;
    std::sort(c.begin(), c.end());
    s.min = c.front();
    s.max = c.back();
    const std::size_t n = c.size();
    s.median = n % 2 ? static_cast<double>(c[n / 2]) : 0.5 * static_cast<double>(c[n / 2 - 1] + c[n / 2]);
    s.histogram.assign(bins, 0);
    for (double v : dom.normalized) {
        const auto b = std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
        ++s.histogram[b];
    }
    return s;
}

inline DominanceSummary cmd_gen_data(const RunConfig& c, const std::filesystem::path& out, std::ostream& log) {
    c.validate();
    const TaskSpec task = task_from_config(c);
    ensure_dir(out);
    Timings t;
    const OfflineDataset ds = detail::timed_phase("data", PhaseError::npos, t, [&] {
        return generate_offline_dataset(task, c.task.size, c.task.seed, c.task.strategy);
    });
    save_dataset(ds, out / "dataset.pcdd");
    if (c.task.export_csv) export_dataset_csv(ds, out / "dataset.csv");
    const DominanceSummary s = summarize_dominance(dominance_numbers(ds.Y));
    log << "dataset " << ds.task_name << " d=" << ds.dim() << " m=" << ds.n_objectives() << " N=" << ds.size()
        << " seed=" << ds.seed << " strategy=" << to_string(c.task.strategy) << "\n";
    log << "dominance number: min=" << s.min << " median=" << s.median << " max=" << s.max << "\n";
    log << "normalized dominance histogram:\n";
    for (std::size_t b = 0; b < s.histogram.size(); ++b) {
        log << "  [" << detail::fmt_double(static_cast<double>(b) / 10.0) << ", "
            << detail::fmt_double(static_cast<double>(b + 1) / 10.0) << (b + 1 == s.histogram.size() ? "]" : ")")
            << " " << s.histogram[b] << "\n";
    }
    return s;
}

inline RunResult cmd_run(const RunConfig& c, const std::filesystem::path* out, std::ostream& log,
                         ModelCache* cache = nullptr) {
    c.validate();
    RunResult res;
    res.config = c;
    const auto t0 = std::chrono::steady_clock::now();
    auto finish_timings = [&] {
        for (const auto& s : res.seeds) {
            for (const auto& [k, v] : s.timings) res.timings[k] += v;
        }
        res.timings["wall"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    try {
        const PreparedData p = prepare_data(c, res.timings);
        res.task_name = p.task.name;
        res.d = p.task.d;
        res.m = p.task.m;
        res.n = p.ds.size();
        res.front_size = p.fronts.fronts.front().size();
        res.weight_cv = coefficient_of_variation(p.weights.w);
        res.dbest = detail::timed_phase("baseline", PhaseError::npos, res.timings, [&] {
            return evaluate_run(select_rows(p.ds.Y, p.fronts.fronts.front()), p.stats, c.eval.ref_multiplier);
        });

        auto one = [&](std::size_t k) {
            return c.precision == Precision::f32 ? run_one_seed<float>(c, p, k, cache)
                                                 : run_one_seed<double>(c, p, k, cache);
        };
        if (c.eval.parallel_seeds && c.eval.seeds > 1) {
            std::vector<std::future<SeedResult>> futs;
            for (std::size_t k = 0; k < c.eval.seeds; ++k) futs.push_back(std::async(std::launch::async, one, k));
            std::exception_ptr first;
            for (auto& f : futs) {
                try {
                    res.seeds.push_back(f.get());
                } catch (...) {
                    if (!first) first = std::current_exception();
                }
            }
            if (first) std::rethrow_exception(first);
        } else {
            for (std::size_t k = 0; k < c.eval.seeds; ++k) {
                res.seeds.push_back(one(k));
                const auto& s = res.seeds.back();
                log << "seed " << k << ": hv_100=" << s.report.hv_100 << " (D(best) " << res.dbest.hv_100
                    << ") steps=" << s.train_steps << "\n";
            }
        }
    } catch (const PhaseError& e) {
        res.status = "failed";
        res.failed_phase = e.phase();
        res.error = e.what();
        finalize_aggregate(res);
        finish_timings();
        if (out) write_run_artifacts(res, *out);
        throw;
    }
    finalize_aggregate(res);
    finish_timings();
    if (out) write_run_artifacts(res, *out);
    const auto& rel = res.aggregate.at("relative_improvement");
    log << res.task_name << ": hv_100 " << res.aggregate.at("hv_100").mean << " +- " << res.aggregate.at("hv_100").std
        << ", D(best) " << res.dbest.hv_100 << ", relative improvement " << rel.mean << " +- " << rel.std << "\n";
    return res;
}

// Trains one model (seed index 0) and writes model.pcdm, metrics.csv and
// weights.csv.
inline void cmd_train(const RunConfig& c, const std::filesystem::path& out, std::ostream& log) {
    c.validate();
    ensure_dir(out);
    Timings t;
    const PreparedData p = prepare_data(c, t);
    SeedResult s;
    detail::timed_phase("train", 0, t, [&] {
        const auto e = c.precision == Precision::f32 ? train_for_seed<float>(c, p, 0, nullptr)
                                                     : train_for_seed<double>(c, p, 0, nullptr);
        std::visit(
            [&](const auto& tr) {
                save_checkpoint(tr.model, out / "model.pcdm");
                s.metrics = tr.metrics;
                log << "trained " << tr.steps_run << " steps, best holdout " << tr.best_holdout
                    << (tr.stopped_early ? " (early stop)" : "") << "\n";
            },
            *e);
    });
    write_metrics_csv(out / "metrics.csv", {s});
    write_csv(out / "weights.csv", {"w", "raw"}, {p.weights.w, p.weights.raw});
    write_text(out / "config.txt", c.to_text());
}

// Reads the scalar width stored in a checkpoint header.
inline std::uint32_t checkpoint_scalar_bytes(const std::filesystem::path& path) {
    io::Reader r = io::Reader::from_file(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kModelMagic, 4) != 0) throw RuntimeFailure(path.string() + ": not a PCDM checkpoint (bad magic)");
    r.pod<std::uint32_t>();
    return r.pod<std::uint32_t>();
}

// Samples Q designs (seed index 0) from a saved model; no oracle calls.
inline SeedResult cmd_sample(const RunConfig& c, const std::filesystem::path& out, std::ostream& log) {
    c.validate();
    if (c.checkpoint.empty()) throw ConfigError("sample: sampler.checkpoint must name a model file");
    if (!std::filesystem::exists(c.checkpoint)) throw ConfigError("sampler.checkpoint: file '" + c.checkpoint + "' does not exist");
    ensure_dir(out);
    Timings t;
    const PreparedData p = prepare_data(c, t);
    SeedResult s;
    s.seed = run_seed_value(c, 0);
    s.conditioning = detail::timed_phase("condition", 0, t, [&] { return conditioning_for_seed(c, p, s.seed); });
    s.X = detail::timed_phase("sample", 0, t, [&] {
        SamplerConfig sc = c.sampler;
        sc.seed = s.seed;
        auto go = [&](const auto& model) {
            model.check_compatible(p.task.d, p.task.m);
            return sample_batch(model, s.conditioning, p.stats, sc);
        };
        const auto bytes = checkpoint_scalar_bytes(c.checkpoint);
        if (bytes == sizeof(float)) return go(load_checkpoint<float>(c.checkpoint));
        return go(load_checkpoint<double>(c.checkpoint));
    });
    write_front_csv(out / "samples.csv", {s});
    write_text(out / "config.txt", c.to_text());
    log << "sampled " << s.X.rows() << " designs\n";
    return s;
}

// Scores a CSV of decision vectors (columns x0..) with the true evaluator.
inline RunResult cmd_eval(const RunConfig& c, const std::filesystem::path& out, std::ostream& log) {
    c.validate();
    if (c.samples.empty()) throw ConfigError("eval: eval.samples must name a CSV of decision vectors");
    if (!std::filesystem::exists(c.samples)) throw ConfigError("eval.samples: file '" + c.samples + "' does not exist");
    ensure_dir(out);
    RunResult res;
    res.config = c;
    const PreparedData p = prepare_data(c, res.timings);
    res.task_name = p.task.name;
    res.d = p.task.d;
    res.m = p.task.m;
    res.n = p.ds.size();
    res.front_size = p.fronts.fronts.front().size();
    res.weight_cv = coefficient_of_variation(p.weights.w);
    res.dbest = evaluate_run(select_rows(p.ds.Y, p.fronts.fronts.front()), p.stats, c.eval.ref_multiplier);
    SeedResult s;
    detail::timed_phase("evaluate", 0, s.timings, [&] {
        const CsvTable table = read_csv(c.samples);
        const auto xc = table.columns_with_prefix('x');
        if (xc.size() != p.task.d || table.rows.empty()) {
            throw RuntimeFailure(c.samples + ": expected " + std::to_string(p.task.d) + " x columns and at least one row");
        }
        s.X = table.gather(xc);
        for (Eigen::Index i = 0; i < s.X.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.X.cols(); ++j) s.X(i, j) = std::clamp(s.X(i, j), p.task.lower(j), p.task.upper(j));
        }
        CountingOracle oracle(p.task);
        s.Y = oracle.evaluate(s.X);
        s.oracle_calls = oracle.calls();
        s.report = evaluate_run(s.Y, p.stats, c.eval.ref_multiplier);
        s.hv = percentile_hv(s.Y, p.stats, c.eval.percentiles, c.eval.ref_multiplier);
    });
    s.conditioning.targets.resize(s.X.rows(), static_cast<Eigen::Index>(p.task.m));
    s.conditioning.targets.setConstant(std::numeric_limits<double>::quiet_NaN());
    s.conditioning.provenance.assign(static_cast<std::size_t>(s.X.rows()), {});
    res.seeds.push_back(std::move(s));
    finalize_aggregate(res);
    write_run_artifacts(res, out);
    log << "hv_100 " << res.seeds.front().report.hv_100 << ", D(best) " << res.dbest.hv_100 << ", relative improvement "
        << res.seeds.front().relative_improvement << "\n";
    return res;
}

// ---- ablation --------------------------------------------------------------

struct AblationAxis {
    std::string name;
    std::string key;
    std::vector<std::string> grid;
};

inline const std::vector<AblationAxis>& ablation_axes() {
    static const std::vector<AblationAxis> axes = {
        {"tau", "reweight.tau", {"0.01", "0.02", "0.05", "0.1", "0.2", "0.5"}},
        {"gamma", "sampler.gamma", {"1", "2", "2.5", "5", "8"}},
        {"steps", "sampler.steps", {"64", "128", "256", "1024"}},
        {"J", "cond.J", {"8", "16", "32", "64", "128"}},
        {"noise", "cond.noise_sigma", {"0", "0.01", "0.05", "0.1", "0.2"}},
        {"distance", "cond.distance", {"0", "0.05", "0.1", "0.2", "0.3"}},
        {"refdir-method", "cond.refdir_method", {"riesz", "das-dennis"}},
        {"sampler-mode", "sampler.mode", {"stochastic", "deterministic"}},
        {"objectives", "task.m", {"3", "4", "5", "6"}},
    };
    return axes;
}

inline const AblationAxis& find_axis(const std::string& name) {
    for (const auto& a : ablation_axes()) {
        if (a.name == name) return a;
    }
    std::string known;
    for (const auto& a : ablation_axes()) known += (known.empty() ? "" : ", ") + a.name;
    throw ConfigError("unknown ablation axis '" + name + "' (known: " + known + ")");
}

struct SweepRow {
    std::string value;
    bool is_default = false;
    double hv_100_mean = 0.0;
    double hv_100_std = 0.0;
    double rel_mean = 0.0;
    double rel_std = 0.0;
    double ratio = 0.0;  // rel_mean normalized by the default setting
    double weight_cv = 0.0;
};

inline std::vector<SweepRow> cmd_ablate(const RunConfig& c, const std::filesystem::path& out, std::ostream& log) {
    c.validate();
    if (c.ablate.axis.empty()) throw ConfigError("ablate: ablate.axis must be set");
    const AblationAxis& axis = find_axis(c.ablate.axis);
    if (axis.name == "objectives" && !c.task.name.starts_with("dtlz")) {
        throw ConfigError("ablate: the objectives axis needs a DTLZ task, got '" + c.task.name + "'");
    }
    if (axis.name == "tau" && c.reweight.mode != ReweightMode::reweight) {
        throw ConfigError("ablate: the tau axis needs reweight.mode = reweight");
    }
    ensure_dir(out);

    // Canonicalize grid values through the config parser so they compare
    // equal to the default's printed form.
    std::vector<RunConfig> points;
    std::vector<std::string> values;
    // task.m = 0 means "the task's own m"; compare against the resolved count.
    const std::string default_value =
        axis.name == "objectives" ? std::to_string(task_from_config(c).m) : c.get(axis.key);
    const auto& raw_grid = c.ablate.grid.empty() ? axis.grid : c.ablate.grid;
    for (const auto& v : raw_grid) {
        RunConfig pc = c;
        pc.set(axis.key, v);
        const std::string canon = pc.get(axis.key);
        if (std::find(values.begin(), values.end(), canon) != values.end()) continue;
        pc.validate();
        values.push_back(canon);
        points.push_back(std::move(pc));
    }
    if (std::find(values.begin(), values.end(), default_value) == values.end()) {
        values.push_back(default_value);
        points.push_back(c);
    }

    ModelCache cache;
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        log << "ablate " << axis.name << " = " << values[i] << "\n";
        const std::filesystem::path sub = out / (axis.name + "=" + values[i]);
        const RunResult r = cmd_run(points[i], &sub, log, &cache);
        SweepRow row;
        row.value = values[i];
        row.is_default = values[i] == default_value;
        row.hv_100_mean = r.aggregate.at("hv_100").mean;
        row.hv_100_std = r.aggregate.at("hv_100").std;
        row.rel_mean = r.aggregate.at("relative_improvement").mean;
        row.rel_std = r.aggregate.at("relative_improvement").std;
        row.weight_cv = r.weight_cv;
        rows.push_back(row);
    }
    double base = 0.0;
    for (const auto& r : rows) {
        if (r.is_default) base = r.rel_mean;
    }
    for (auto& r : rows) r.ratio = base > 0.0 ? r.rel_mean / base : 0.0;

    std::ofstream csv(out / "sweep.csv", std::ios::trunc);
    if (!csv) throw RuntimeFailure("cannot open '" + (out / "sweep.csv").string() + "' for writing");
    csv << std::setprecision(17);
    csv << "axis,value,is_default,hv_100_mean,hv_100_std,relative_improvement_mean,relative_improvement_std,"
           "normalized_ratio,weight_cv\n";
    for (const auto& r : rows) {
        csv << axis.name << ',' << r.value << ',' << (r.is_default ? 1 : 0) << ',' << r.hv_100_mean << ','
            << r.hv_100_std << ',' << r.rel_mean << ',' << r.rel_std << ',' << r.ratio << ',' << r.weight_cv << '\n';
    }
    if (!csv) throw RuntimeFailure("write failed for sweep.csv");
    return rows;
}

}  // namespace pcd
