// gstuda: generate synthetic tasks, run adaptation experiments, evaluate
// and plot. Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include "gstuda/experiment/config.hpp"
#include "gstuda/experiment/runner.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

namespace ex = gstuda::experiment;

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct ConfigFailure {
    std::string message;
};

ex::ExperimentConfig resolve(const std::string& path, const std::string& out, const std::string& seeds,
                             const std::string& methods) {
    try {
        ex::ExperimentConfig cfg = path.empty() ? ex::ExperimentConfig{} : ex::load_config(path);
        if (!out.empty()) cfg.output_dir = out;
        if (!seeds.empty()) cfg.seeds = ex::parse_seed_list(seeds);
        if (!methods.empty()) cfg.methods = ex::parse_method_list(methods);
        cfg.validate();
        return cfg;
    } catch (const gstuda::InvalidArgument& e) {
        throw ConfigFailure{e.what()};
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uncertainty-aware generative self-training for image translation"};
    app.require_subcommand(1);

    std::string config, out, seeds, methods;
    bool force = false;

    auto* gen = app.add_subcommand("gen", "generate the source and target datasets");
    gen->add_option("--config", config, "experiment config file");
    gen->add_option("--out", out, "output directory (overrides output_dir)");
    gen->add_flag("--force", force, "overwrite an existing output directory");

    auto* run = app.add_subcommand("run", "pretrain, adapt and evaluate every method x seed cell");
    run->add_option("--config", config, "experiment config file");
    run->add_option("--out", out, "output directory (overrides output_dir)");
    run->add_flag("--force", force, "overwrite an existing output directory");
    run->add_option("--seeds", seeds, "comma separated seeds (overrides seeds)");
    run->add_option("--methods", methods, "comma separated methods (overrides methods)");

    auto* plot = app.add_subcommand("plot", "render plots of a finished run");
    plot->add_option("--out", out, "run directory")->required();

    auto* eval = app.add_subcommand("eval", "re-score the final checkpoints of a finished run");
    eval->add_option("--out", out, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    try {
        if (*gen) {
            const auto cfg = resolve(config, out, "", "");
            const auto task = ex::cmd_gen(cfg, cfg.output_dir, force);
            std::cout << "source: " << task.source.size() << " slices, target: " << task.target.size()
                      << " slices -> " << cfg.output_dir.string() << "/data\n";
            for (const auto& [k, v] : task.source.notes) std::cout << k << " = " << v << '\n';
            for (const auto& w : task.warnings) std::cerr << "warning: " << w << '\n';
            return 0;
        }
        if (*run) {
            const auto cfg = resolve(config, out, seeds, methods);
            ex::RunOptions opts;
            opts.force = force;
            opts.progress = &std::cerr;
            const auto summary = ex::cmd_run(cfg, opts);
            for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << "report: " << (cfg.output_dir / "report.md").string() << '\n';
            if (summary.failures() > 0) {
                std::cerr << summary.failures() << " cell(s) failed; see cells.csv\n";
                return kRuntimeError;
            }
            return 0;
        }
        if (*plot) {
            const auto missing = ex::cmd_plot(out);
            for (const auto& m : missing) std::cerr << "missing: " << m << '\n';
            std::cout << "plots: " << (std::filesystem::path(out) / "plots").string() << '\n';
            return 0;
        }
        if (*eval) {
            const auto rows = ex::cmd_eval(out);
            for (const auto& r : rows)
                std::cout << fmt::format("{:<18} {:<5} {:.4f} +- {:.4f}\n", r.method, gstuda::to_string(r.metric), r.mean, r.sd);
            return 0;
        }
    } catch (const ConfigFailure& e) {
        std::cerr << "config error: " << e.message << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}
