#pragma once

// Run configuration: flat, line-oriented `block.key = value` text with '#'
// comments. Every field has a default; unknown keys and unparsable values
// raise ConfigError.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pcd/benchmarks.hpp"
#include "pcd/conditioning.hpp"
#include "pcd/diffusion.hpp"
#include "pcd/error.hpp"
#include "pcd/indicators.hpp"
#include "pcd/refdirs.hpp"
#include "pcd/reweighting.hpp"
#include "pcd/sampler.hpp"

namespace pcd {

enum class Precision { f32, f64 };

struct TaskBlock {
    std::string name = "zdt1";
    std::size_t d = 0;  // 0 selects the task's conventional dimension
    std::size_t m = 0;  // 0 selects the task's conventional objective count
    std::size_t size = kDefaultDatasetSize;
    SamplingStrategy strategy = SamplingStrategy::ea_collected;
    std::uint64_t seed = 0;
    std::string dataset;  // optional PCDD file used instead of generating
    bool export_csv = false;
};

struct ReweightBlock {
    ReweightMode mode = ReweightMode::reweight;
    std::size_t bins = kDefaultBins;
    double K = kDefaultK;
    double tau = kDefaultTau;
    double keep_fraction = 0.2;  // prune mode only
};

struct ConditioningBlock {
    std::size_t L = 32;
    std::size_t J = 32;
    std::size_t Q = 256;
    double distance = 0.1;
    double noise_sigma = 0.05;
    ConditioningStrategy strategy = ConditioningStrategy::refdir;
    RefDirMethod refdir_method = RefDirMethod::riesz;
};

struct EvalBlock {
    std::vector<double> percentiles{100.0, 75.0, 50.0};
    double ref_multiplier = kDefaultRefMultiplier;
    std::size_t seeds = 1;
    std::uint64_t seed = 0;  // base seed; seed k runs on stream (seed, k)
    bool parallel_seeds = false;
};

struct AblateBlock {
    std::string axis;
    std::vector<std::string> grid;  // empty selects the axis default grid
};

struct RunConfig {
    TaskBlock task;
    ReweightBlock reweight;
    ConditioningBlock cond;
    DenoiserConfig model;
    TrainingConfig train;
    Precision precision = Precision::f32;
    SamplerConfig sampler;
    EvalBlock eval;
    AblateBlock ablate;
    std::string checkpoint;  // sample: model file to load
    std::string samples;     // eval: CSV of decision vectors to score

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    // Every key with its current value, in declaration order.
    std::vector<std::pair<std::string, std::string>> snapshot() const;
    std::string to_text() const;
    void validate() const;

    static RunConfig parse(const std::string& text, const std::string& origin = "<string>");
    static RunConfig load(const std::filesystem::path& path);
    void apply_override(const std::string& assignment);
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string fmt_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError(key + ": expected a real number, got '" + v + "'");
    }
    return out;
}

template <class U>
U parse_unsigned(const std::string& key, const std::string& v) {
    U out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class F>
auto as_config_error(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const ContractError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

struct Field {
    std::string key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
};

inline Field size_field(const std::string& key, std::size_t& ref) {
    return {key, [&ref, key](const std::string& v) { ref = parse_unsigned<std::size_t>(key, v); },
            [&ref] { return std::to_string(ref); }};
}

inline Field u64_field(const std::string& key, std::uint64_t& ref) {
    return {key, [&ref, key](const std::string& v) { ref = parse_unsigned<std::uint64_t>(key, v); },
            [&ref] { return std::to_string(ref); }};
}

inline Field real_field(const std::string& key, double& ref) {
    return {key, [&ref, key](const std::string& v) { ref = parse_double(key, v); }, [&ref] { return fmt_double(ref); }};
}

inline Field bool_field(const std::string& key, bool& ref) {
    return {key, [&ref, key](const std::string& v) { ref = parse_bool(key, v); },
            [&ref] { return std::string(ref ? "true" : "false"); }};
}

inline Field string_field(const std::string& key, std::string& ref) {
    return {key, [&ref](const std::string& v) { ref = v; }, [&ref] { return ref; }};
}

template <class E, class Parse>
Field enum_field(const std::string& key, E& ref, Parse parse) {
    return {key, [&ref, key, parse](const std::string& v) { ref = as_config_error(key, [&] { return parse(v); }); },
            [&ref] { return to_string(ref); }};
}

inline std::vector<Field> fields(RunConfig& c) {
    std::vector<Field> f;
    f.push_back(string_field("task.name", c.task.name));
    f.push_back(size_field("task.d", c.task.d));
    f.push_back(size_field("task.m", c.task.m));
    f.push_back(size_field("task.size", c.task.size));
    f.push_back(enum_field("task.strategy", c.task.strategy, parse_strategy));
    f.push_back(u64_field("task.seed", c.task.seed));
    f.push_back(string_field("task.dataset", c.task.dataset));
    f.push_back(bool_field("task.export_csv", c.task.export_csv));

    f.push_back(enum_field("reweight.mode", c.reweight.mode, parse_reweight_mode));
    f.push_back(size_field("reweight.bins", c.reweight.bins));
    f.push_back(real_field("reweight.K", c.reweight.K));
    f.push_back(real_field("reweight.tau", c.reweight.tau));
    f.push_back(real_field("reweight.keep_fraction", c.reweight.keep_fraction));

    f.push_back(size_field("cond.L", c.cond.L));
    f.push_back(size_field("cond.J", c.cond.J));
    f.push_back(size_field("cond.Q", c.cond.Q));
    f.push_back(real_field("cond.distance", c.cond.distance));
    f.push_back(real_field("cond.noise_sigma", c.cond.noise_sigma));
    f.push_back(enum_field("cond.strategy", c.cond.strategy, parse_conditioning_strategy));
    f.push_back(enum_field("cond.refdir_method", c.cond.refdir_method, parse_refdir_method));

    f.push_back(size_field("model.width", c.model.width));
    f.push_back(size_field("model.depth", c.model.depth));
    f.push_back(size_field("model.rff_dim", c.model.rff_dim));
    f.push_back(size_field("model.cond_embed_dim", c.model.cond_embed_dim));
    f.push_back(real_field("model.cfg_dropout", c.model.cfg_dropout_prob));
    f.push_back(real_field("model.sigma_data", c.model.sigma_data));
    f.push_back(real_field("model.p_mean", c.model.p_mean));
    f.push_back(real_field("model.p_std", c.model.p_std));
    f.push_back(real_field("model.rff_scale", c.model.rff_scale));
    f.push_back(enum_field("model.x_scaling", c.model.x_scaling, parse_x_scaling));
    f.push_back({"model.precision",
                 [&c](const std::string& v) {
                     if (v == "float" || v == "f32") c.precision = Precision::f32;
                     else if (v == "double" || v == "f64") c.precision = Precision::f64;
                     else throw ConfigError("model.precision: expected float or double, got '" + v + "'");
                 },
                 [&c] { return std::string(c.precision == Precision::f32 ? "float" : "double"); }});

    f.push_back(size_field("train.batch_size", c.train.batch_size));
    f.push_back(size_field("train.max_steps", c.train.max_steps));
    f.push_back(real_field("train.lr", c.train.learning_rate));
    f.push_back(real_field("train.weight_decay", c.train.weight_decay));
    f.push_back(real_field("train.beta1", c.train.beta1));
    f.push_back(real_field("train.beta2", c.train.beta2));
    f.push_back(real_field("train.adam_eps", c.train.adam_eps));
    f.push_back(real_field("train.ema_decay", c.train.ema_decay));
    f.push_back(bool_field("train.early_stop", c.train.early_stop));
    f.push_back(real_field("train.holdout_fraction", c.train.holdout_fraction));
    f.push_back(size_field("train.eval_interval", c.train.eval_interval));
    f.push_back(size_field("train.patience", c.train.patience));

    f.push_back(size_field("sampler.steps", c.sampler.steps));
    f.push_back(real_field("sampler.sigma_min", c.sampler.sigma_min));
    f.push_back(real_field("sampler.sigma_max", c.sampler.sigma_max));
    f.push_back(real_field("sampler.rho", c.sampler.rho));
    f.push_back(real_field("sampler.s_churn", c.sampler.s_churn));
    f.push_back(real_field("sampler.s_tmin", c.sampler.s_tmin));
    f.push_back(real_field("sampler.s_tmax", c.sampler.s_tmax));
    f.push_back(real_field("sampler.s_noise", c.sampler.s_noise));
    f.push_back(real_field("sampler.gamma", c.sampler.guidance_scale));
    f.push_back(enum_field("sampler.mode", c.sampler.mode, parse_sampler_mode));
    f.push_back(string_field("sampler.checkpoint", c.checkpoint));

    f.push_back({"eval.percentiles",
                 [&c](const std::string& v) {
                     c.eval.percentiles.clear();
                     for (const auto& s : split_list(v)) c.eval.percentiles.push_back(parse_double("eval.percentiles", s));
                 },
                 [&c] {
                     std::string s;
                     for (std::size_t i = 0; i < c.eval.percentiles.size(); ++i) {
                         s += (i ? "," : "") + fmt_double(c.eval.percentiles[i]);
                     }
                     return s;
                 }});
    f.push_back(real_field("eval.ref_multiplier", c.eval.ref_multiplier));
    f.push_back(size_field("eval.seeds", c.eval.seeds));
    f.push_back(u64_field("eval.seed", c.eval.seed));
    f.push_back(bool_field("eval.parallel_seeds", c.eval.parallel_seeds));
    f.push_back(string_field("eval.samples", c.samples));

    f.push_back(string_field("ablate.axis", c.ablate.axis));
    f.push_back({"ablate.grid", [&c](const std::string& v) { c.ablate.grid = split_list(v); },
                 [&c] {
                     std::string s;
                     for (std::size_t i = 0; i < c.ablate.grid.size(); ++i) s += (i ? "," : "") + c.ablate.grid[i];
                     return s;
                 }});
    return f;
}

inline const Field& find_field(const std::vector<Field>& fs, const std::string& key) {
    for (const auto& f : fs) {
        if (f.key == key) return f;
    }
    throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
    const auto fs = detail::fields(*this);
    detail::find_field(fs, key).set(value);
}

inline std::string RunConfig::get(const std::string& key) const {
    auto& self = const_cast<RunConfig&>(*this);
    const auto fs = detail::fields(self);
    return detail::find_field(fs, key).get();
}

inline std::vector<std::pair<std::string, std::string>> RunConfig::snapshot() const {
    auto& self = const_cast<RunConfig&>(*this);
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : detail::fields(self)) out.emplace_back(f.key, f.get());
    return out;
}

inline std::string RunConfig::to_text() const {
    std::string s;
    for (const auto& [k, v] : snapshot()) s += k + " = " + v + "\n";
    return s;
}

inline void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set(detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

inline RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        try {
            c.apply_override(line);
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return c;
}

inline RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

inline void RunConfig::validate() const {
    auto check = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    detail::as_config_error("task", [&] { return make_task(task.name, task.d, task.m); });
    check(task.size >= 2, "task.size must be >= 2");
    if (!task.dataset.empty()) {
        check(std::filesystem::exists(task.dataset), "task.dataset: file '" + task.dataset + "' does not exist");
    }
    check(reweight.bins >= 1, "reweight.bins must be >= 1");
    check(reweight.K > 0.0, "reweight.K must be > 0");
    check(reweight.tau > 0.0, "reweight.tau must be > 0");
    check(reweight.keep_fraction > 0.0 && reweight.keep_fraction <= 1.0, "reweight.keep_fraction must be in (0, 1]");
    check(cond.L >= 1, "cond.L must be >= 1");
    check(cond.J >= 1 && cond.J <= cond.Q, "cond.J must satisfy 1 <= J <= Q");
    check(cond.distance >= 0.0 && cond.distance < 1.0, "cond.distance must be in [0, 1)");
    check(cond.noise_sigma >= 0.0, "cond.noise_sigma must be >= 0");
    detail::as_config_error("model", [&] { model.validate(); return 0; });
    detail::as_config_error("train", [&] { train.validate(); return 0; });
    detail::as_config_error("sampler", [&] { sampler.validate(); return 0; });
    check(!eval.percentiles.empty(), "eval.percentiles must list at least one value");
    for (double p : eval.percentiles) check(p > 0.0 && p <= 100.0, "eval.percentiles must lie in (0, 100]");
    check(eval.ref_multiplier > 1.0, "eval.ref_multiplier must be > 1");
    check(eval.seeds >= 1, "eval.seeds must be >= 1");
}

}  // namespace pcd
