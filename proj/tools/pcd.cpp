// pcd: command-line entry point.
//
//   pcd gen-data|train|sample|eval|run|ablate --config <path> [--set k=v ...] --out <dir>
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <CLI11.hpp>

#include <iostream>

#include "pcd/pcd.hpp"

namespace {

struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::string out = "out";
    std::string axis;
    bool print_config = false;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config,-c", o.config, "Config file (key = value lines)");
    sub->add_option("--set,-s", o.overrides, "Override one key, e.g. --set sampler.gamma=5")->take_all();
    sub->add_option("--out,-o", o.out, "Output directory");
    sub->add_flag("--print-config", o.print_config, "Print the effective configuration first");
}

pcd::RunConfig load_config(const Options& o) {
    pcd::RunConfig c = o.config.empty() ? pcd::RunConfig{} : pcd::RunConfig::load(o.config);
    for (const auto& s : o.overrides) c.apply_override(s);
    if (!o.axis.empty()) c.ablate.axis = o.axis;
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Offline multi-objective optimization with preference-conditioned diffusion"};
    app.require_subcommand(1);
    Options o;
    auto* gen = app.add_subcommand("gen-data", "Generate an offline dataset (PCDD) and print dominance statistics");
    auto* trn = app.add_subcommand("train", "Train a denoiser and write model.pcdm");
    auto* smp = app.add_subcommand("sample", "Sample Q designs from a saved model (sampler.checkpoint)");
    auto* evl = app.add_subcommand("eval", "Score a CSV of designs (eval.samples) with the true evaluator");
    auto* run = app.add_subcommand("run", "Full pipeline over eval.seeds seeds; writes result.json");
    auto* abl = app.add_subcommand("ablate", "Sweep one axis; writes sweep.csv");
    for (auto* s : {gen, trn, smp, evl, run, abl}) add_common(s, o);
    abl->add_option("--axis", o.axis, "tau|gamma|steps|J|noise|distance|refdir-method|sampler-mode|objectives");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const pcd::RunConfig c = load_config(o);
        if (o.print_config) std::cout << c.to_text();
        const std::filesystem::path out = o.out;
        if (gen->parsed()) {
            pcd::cmd_gen_data(c, out, std::cout);
        } else if (trn->parsed()) {
            pcd::cmd_train(c, out, std::cout);
        } else if (smp->parsed()) {
            pcd::cmd_sample(c, out, std::cout);
        } else if (evl->parsed()) {
            pcd::cmd_eval(c, out, std::cout);
        } else if (run->parsed()) {
            pcd::cmd_run(c, &out, std::cout);
        } else if (abl->parsed()) {
            pcd::cmd_ablate(c, out, std::cout);
        }
    } catch (const pcd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
