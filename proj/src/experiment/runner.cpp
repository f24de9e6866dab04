#include "gstuda/experiment/runner.hpp"

#include "gstuda/core/dataset_io.hpp"
#include "gstuda/core/oracle_access.hpp"
#include "gstuda/core/rng.hpp"
#include "gstuda/experiment/plot.hpp"
#include "gstuda/nn/checkpoint.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace gstuda::experiment {

namespace {

constexpr const char* kResolvedConfig = "config.resolved.txt";
constexpr const char* kKnownEntries[] = {"data", "pretrain", "cells", "sweep", "plots", "eval", "report.csv",
                                          "report.md", "significance.csv", "sensitivity.csv", "cells.csv",
                                          kResolvedConfig};

std::uint64_t translator_seed(std::uint64_t seed) { return derive_seed({seed, 1}); }
std::uint64_t attention_seed(std::uint64_t seed) { return derive_seed({seed, 2}); }

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream os(file);
    if (!os) throw IoError("cannot write " + file.string());
    os << text;
}

void prepare_dir(const fs::path& out, bool force) {
    if (fs::exists(out) && !fs::is_directory(out)) throw IoError(out.string() + " exists and is not a directory");
    if (fs::exists(out) && !fs::is_empty(out)) {
        if (!force) throw IoError(out.string() + " is not empty; pass --force to overwrite");
        for (const char* e : kKnownEntries) fs::remove_all(out / e);
    }
    fs::create_directories(out);
}

// Preview slices saved per cell for plotting.
std::vector<std::size_t> preview_slices(const TrainConfig& cfg, std::size_t n) {
    std::vector<std::size_t> v{std::min(cfg.probe_slice, n - 1)};
    if (n / 2 != v.front()) v.push_back(n / 2);
    return v;
}

template <class F>
void run_parallel(std::size_t n, std::size_t workers, F&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
}

Dataset supervised_target(const Dataset& target) {
    std::vector<PairedSample> s;
    for (const auto& u : target.unpaired())
        s.emplace_back(u.input(), OracleAccess::hidden_target(u), u.subject_id());
    return Dataset(std::move(s), target.seed());
}

struct CellJob {
    Method method;
    std::uint64_t seed;
    std::string sweep_param;
    double sweep_value = 0.0;
    TrainConfig cfg;
};

CellResult run_cell(const CellJob& job, const TranslatorModel& pretrained, const synth::Task& task,
                    const ExperimentConfig& ecfg, const fs::path& dir) {
    CellResult r;
    r.method = job.method;
    r.seed = job.seed;
    r.sweep_param = job.sweep_param;
    r.sweep_value = job.sweep_value;
    try {
        fs::create_directories(dir);
        ExperimentConfig cell_cfg = ecfg;
        cell_cfg.train = job.cfg;
        cell_cfg.methods = {job.method};
        cell_cfg.seeds = {job.seed};
        write_text(dir / kResolvedConfig, resolved_config(cell_cfg));

        TranslatorModel model = pretrained;
        std::optional<AdaptationState> state;
        if (job.method == Method::target_supervised) {
            train_supervised(model, task.source, supervised_target(task.target), job.cfg);
        } else if (job.cfg.rounds > 0) {
            AttentionModel attention(job.cfg.attention_arch, attention_seed(job.seed));
            TrainerIo io{ecfg.save_checkpoints ? dir : fs::path{}};
            state = adapt(model, &attention, task.source, task.target, job.cfg, io);
            if (!ecfg.save_checkpoints) {
                write_training_log(dir / "train_log.csv", state->log);
            }
            r.history = state->history;
            if (uses_attention(job.cfg.mask_mode)) save_checkpoint(dir / "final.attn.ckpt", attention);
        }
        save_checkpoint(dir / "final.ckpt", model);

        std::vector<ImageGrid> preds;
        for (std::size_t i = 0; i < task.target.size(); ++i) preds.push_back(predict(model, task.target.input(i)));
        r.metrics = score(preds, task.target);
        {
            auto os = fmt::output_file((dir / "metrics.csv").string());
            os.print("slice,l1,ssim,psnr\n");
            for (std::size_t i = 0; i < r.metrics.per_sample.size(); ++i) {
                const auto& s = r.metrics.per_sample[i];
                os.print("{},{:.6f},{:.6f},{:.6f}\n", i, s.l1, s.ssim, s.psnr);
            }
        }
        fs::create_directories(dir / "preview");
        for (std::size_t i : preview_slices(job.cfg, task.target.size())) {
            write_f32_le(dir / "preview" / fmt::format("pred_{}.f32", i), preds[i].values());
            if (state && !state->uncertainty.empty()) {
                write_f32_le(dir / "preview" / fmt::format("uncertainty_{}.f32", i), state->uncertainty[i].values());
                write_f32_le(dir / "preview" / fmt::format("mask_{}.f32", i), state->masks[i].weights.values());
            }
        }
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

std::string csv_escape(std::string s) {
    for (auto& c : s)
        if (c == ',' || c == '\n' || c == '"') c = ' ';
    return s;
}

} // namespace

std::size_t worker_count() {
    if (const char* env = std::getenv("GSTUDA_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string CellResult::dir_name() const {
    if (sweep_param.empty()) return fmt::format("{}__seed_{}", to_string(method), seed);
    return fmt::format("{}_{}__seed_{}", sweep_param, sweep_value, seed);
}

std::size_t RunSummary::failures() const noexcept {
    std::size_t n = 0;
    for (const auto& c : cells) n += c.ok ? 0 : 1;
    return n;
}

synth::Task cmd_gen(const ExperimentConfig& cfg, const fs::path& out, bool force) {
    cfg.validate();
    prepare_dir(out, force);
    synth::Task task = synth::build_task(cfg.task);
    save_dataset(task.source, out / "data" / "source");
    save_dataset(task.target, out / "data" / "target");
    write_text(out / kResolvedConfig, resolved_config(cfg));
    return task;
}

RunSummary cmd_run(const ExperimentConfig& cfg, const RunOptions& options) {
    cfg.validate();
    const fs::path out = cfg.output_dir;
    const std::size_t workers = options.workers ? options.workers : worker_count();
    std::mutex log_mutex;
    auto progress = [&](const std::string& msg) {
        if (!options.progress) return;
        std::lock_guard lock(log_mutex);
        *options.progress << msg << '\n' << std::flush;
    };

    synth::Task task = cmd_gen(cfg, out, options.force);
    RunSummary summary;
    summary.warnings = task.warnings;
    progress(fmt::format("datasets: {} source slices, {} target slices", task.source.size(), task.target.size()));

    // Source pre-training, shared by every method of one seed.
    std::vector<std::optional<TranslatorModel>> pretrained(cfg.seeds.size());
    std::vector<std::string> pretrain_error(cfg.seeds.size());
    run_parallel(cfg.seeds.size(), workers, [&](std::size_t i) {
        const auto seed = cfg.seeds[i];
        try {
            TrainConfig tc = cfg.train;
            tc.seed = seed;
            TranslatorModel model(tc.arch, translator_seed(seed));
            pretrain(model, task.source, tc, {out / "pretrain" / fmt::format("seed_{}", seed)});
            pretrained[i].emplace(std::move(model));
            progress(fmt::format("pretrain seed={} done", seed));
        } catch (const std::exception& e) {
            pretrain_error[i] = e.what();
            progress(fmt::format("pretrain seed={} FAILED: {}", seed, e.what()));
        }
    });

    std::vector<CellJob> jobs;
    for (Method m : cfg.methods)
        for (auto seed : cfg.seeds) {
            TrainConfig tc = method_config(m, cfg.train);
            tc.seed = seed;
            jobs.push_back({m, seed, {}, 0.0, tc});
        }
    for (double b : cfg.sweep_beta)
        for (auto seed : cfg.seeds) {
            TrainConfig tc = method_config(Method::ac_gst, cfg.train);
            tc.seed = seed;
            tc.beta = b;
            jobs.push_back({Method::ac_gst, seed, "beta", b, tc});
        }
    for (auto k : cfg.sweep_K)
        for (auto seed : cfg.seeds) {
            TrainConfig tc = method_config(Method::ac_gst, cfg.train);
            tc.seed = seed;
            tc.K = k;
            jobs.push_back({Method::ac_gst, seed, "K", static_cast<double>(k), tc});
        }

    summary.cells.resize(jobs.size());
    run_parallel(jobs.size(), workers, [&](std::size_t j) {
        const auto& job = jobs[j];
        const std::size_t si = static_cast<std::size_t>(
            std::find(cfg.seeds.begin(), cfg.seeds.end(), job.seed) - cfg.seeds.begin());
        CellResult r;
        r.method = job.method;
        r.seed = job.seed;
        r.sweep_param = job.sweep_param;
        r.sweep_value = job.sweep_value;
        const fs::path dir = out / (job.sweep_param.empty() ? "cells" : "sweep") / r.dir_name();
        if (!pretrained[si]) {
            r.error = "pre-training failed: " + pretrain_error[si];
        } else {
            r = run_cell(job, *pretrained[si], task, cfg, dir);
        }
        progress(r.ok ? fmt::format("cell {} done: l1={:.4f}", r.dir_name(), r.metrics.mean.l1)
                      : fmt::format("cell {} FAILED: {}", r.dir_name(), r.error));
        summary.cells[j] = std::move(r);
    });

    write_reports(out, cfg, summary);
    return summary;
}

void write_reports(const fs::path& dir, const ExperimentConfig& cfg, const RunSummary& summary) {
    std::vector<std::string> order;
    for (Method m : kAllMethods)
        if (std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end()) order.push_back(to_string(m));

    std::vector<MetricsReport> per_seed;
    for (auto seed : cfg.seeds) {
        MetricsReport rep;
        rep.fingerprint = fmt::format("seed={}", seed);
        for (const auto& c : summary.cells)
            if (c.ok && c.seed == seed && c.sweep_param.empty()) rep.per_method.emplace(to_string(c.method), c.metrics);
        rep.order = order;
        per_seed.push_back(std::move(rep));
    }
    const auto rows = aggregate(per_seed, order);
    write_report_csv(dir / "report.csv", rows);
    write_report_md(dir / "report.md", rows, order);
    const std::string reference = to_string(Method::ac_gst);
    write_significance_csv(dir / "significance.csv", significance(per_seed, reference, order));

    {
        auto os = fmt::output_file((dir / "cells.csv").string());
        os.print("cell,method,seed,status,l1,ssim,psnr,error\n");
        for (const auto& c : summary.cells)
            os.print("{},{},{},{},{:.6f},{:.6f},{:.6f},{}\n", c.dir_name(), to_string(c.method), c.seed,
                     c.ok ? "ok" : "failed", c.metrics.mean.l1, c.metrics.mean.ssim, c.metrics.mean.psnr,
                     csv_escape(c.error));
    }

    if (!cfg.sweep_beta.empty() || !cfg.sweep_K.empty()) {
        auto os = fmt::output_file((dir / "sensitivity.csv").string());
        os.print("param,value,seed,l1,ssim,psnr\n");
        auto emit = [&](const std::string& param, double value, const CellResult& c) {
            os.print("{},{},{},{:.6f},{:.6f},{:.6f}\n", param, value, c.seed, c.metrics.mean.l1, c.metrics.mean.ssim,
                     c.metrics.mean.psnr);
        };
        for (const auto& c : summary.cells) {
            if (!c.ok) continue;
            if (c.sweep_param.empty() && c.method == Method::ac_gst) {
                if (!cfg.sweep_beta.empty()) emit("beta", cfg.train.beta, c);
                if (!cfg.sweep_K.empty()) emit("K", static_cast<double>(cfg.train.K), c);
            } else if (!c.sweep_param.empty()) {
                emit(c.sweep_param, c.sweep_value, c);
            }
        }
    }
}

namespace {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw IoError("csv: missing column " + name);
    }
};

std::optional<CsvTable> read_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) return std::nullopt;
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> v;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) v.push_back(item);
        return v;
    };
    if (std::getline(in, line)) t.header = split(line);
    while (std::getline(in, line))
        if (!line.empty()) t.rows.push_back(split(line));
    return t;
}

ExperimentConfig load_run_config(const fs::path& run_dir) {
    if (!fs::exists(run_dir / kResolvedConfig))
        throw IoError(run_dir.string() + " holds no run: expected " + kResolvedConfig +
                      ", data/, cells/ (run `gstuda run` first)");
    return load_config(run_dir / kResolvedConfig);
}

} // namespace

std::vector<AggregateRow> cmd_eval(const fs::path& run_dir) {
    const ExperimentConfig cfg = load_run_config(run_dir);
    const Dataset target = load_dataset(run_dir / "data" / "target");
    std::vector<std::string> order;
    for (Method m : kAllMethods)
        if (std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end()) order.push_back(to_string(m));
    std::vector<MetricsReport> per_seed;
    for (auto seed : cfg.seeds) {
        std::vector<std::pair<std::string, std::vector<ImageGrid>>> preds;
        for (const auto& name : order) {
            CellResult key;
            key.method = method_from_string(name);
            key.seed = seed;
            const fs::path ckpt = run_dir / "cells" / key.dir_name() / "final.ckpt";
            if (!fs::exists(ckpt)) continue;
            const TranslatorModel model = load_translator(ckpt);
            std::vector<ImageGrid> p;
            for (std::size_t i = 0; i < target.size(); ++i) p.push_back(predict(model, target.input(i)));
            preds.emplace_back(name, std::move(p));
        }
        per_seed.push_back(evaluate(preds, target, fmt::format("seed={}", seed)));
    }
    const auto rows = aggregate(per_seed, order);
    fs::create_directories(run_dir / "eval");
    write_report_csv(run_dir / "eval" / "report.csv", rows);
    write_report_md(run_dir / "eval" / "report.md", rows, order);
    return rows;
}

std::vector<std::string> cmd_plot(const fs::path& run_dir) {
    const ExperimentConfig cfg = load_run_config(run_dir);
    std::vector<std::string> missing;
    const fs::path plots = run_dir / "plots";
    fs::create_directories(plots);

    std::optional<Dataset> target;
    try {
        target = load_dataset(run_dir / "data" / "target");
    } catch (const std::exception&) {
        missing.push_back("data/target");
    }
    const std::uint64_t seed = cfg.seeds.front();
    const double lo = target && !target->empty() ? target->input(0).range_lo() : 0.0;
    const double hi = target && !target->empty() ? target->input(0).range_hi() : 255.0;

    auto read_grid = [&](const fs::path& f, double range_lo, double range_hi) -> std::optional<ImageGrid> {
        if (!target || !fs::exists(f)) return std::nullopt;
        auto v = read_f32_le(f, target->height() * target->width());
        return ImageGrid(target->height(), target->width(), std::move(v), range_lo, range_hi);
    };

    // Sample grid: input, truth and each method's prediction per preview slice.
    if (target) {
        std::vector<std::vector<Tile>> rows;
        for (std::size_t i : preview_slices(cfg.train, target->size())) {
            std::vector<Tile> row;
            row.push_back({fmt::format("INPUT {}", i), target->input(i), lo, hi});
            if (const auto& t = OracleAccess::maybe_hidden_target(target->unpaired()[i]))
                row.push_back({"TRUTH", *t, lo, hi});
            for (Method m : cfg.methods) {
                CellResult key;
                key.method = m;
                key.seed = seed;
                auto g = read_grid(run_dir / "cells" / key.dir_name() / "preview" / fmt::format("pred_{}.f32", i), lo, hi);
                if (g) row.push_back({to_string(m), *g, lo, hi});
                else missing.push_back(fmt::format("cells/{}/preview/pred_{}.f32", key.dir_name(), i));
            }
            rows.push_back(std::move(row));
        }
        tile_grid(plots / "samples.ppm", rows);

        // Uncertainty and mask maps of the adaptive methods.
        std::vector<std::vector<Tile>> urows;
        const std::size_t i = preview_slices(cfg.train, target->size()).front();
        for (Method m : cfg.methods) {
            if (m == Method::no_uda || m == Method::target_supervised) continue;
            CellResult key;
            key.method = m;
            key.seed = seed;
            const fs::path pv = run_dir / "cells" / key.dir_name() / "preview";
            auto u = read_grid(pv / fmt::format("uncertainty_{}.f32", i), 0.0, 1.0);
            auto mk = read_grid(pv / fmt::format("mask_{}.f32", i), 0.0, 1.0);
            if (!u || !mk) {
                missing.push_back(fmt::format("cells/{}/preview/uncertainty_{}.f32", key.dir_name(), i));
                continue;
            }
            urows.push_back({{fmt::format("{} U", to_string(m)), *u, 0.0, std::max(u->max(), 1e-12)},
                             {"MASK", *mk, 0.0, 1.0}});
        }
        if (!urows.empty()) tile_grid(plots / "uncertainty_masks.ppm", urows);
    }

    // Mean total uncertainty per round (probe slice), averaged over seeds.
    {
        std::vector<Series> series;
        std::vector<std::string> notes;
        for (Method m : cfg.methods) {
            if (m == Method::no_uda || m == Method::target_supervised) continue;
            std::vector<std::vector<double>> per_seed;
            std::vector<double> rounds;
            for (auto s : cfg.seeds) {
                CellResult key;
                key.method = m;
                key.seed = s;
                auto t = read_csv(run_dir / "cells" / key.dir_name() / "uncertainty_history.csv");
                if (!t) {
                    missing.push_back(fmt::format("cells/{}/uncertainty_history.csv", key.dir_name()));
                    continue;
                }
                std::vector<double> u;
                rounds.clear();
                for (const auto& row : t->rows) {
                    rounds.push_back(std::stod(row[t->col("round")]));
                    u.push_back(std::stod(row[t->col("probe_u")]));
                }
                per_seed.push_back(std::move(u));
            }
            if (per_seed.empty()) continue;
            Series sr{to_string(m), rounds, std::vector<double>(rounds.size(), 0.0), {}};
            for (const auto& u : per_seed)
                for (std::size_t k = 0; k < std::min(u.size(), sr.y.size()); ++k)
                    sr.y[k] += u[k] / static_cast<double>(per_seed.size());
            std::size_t rises = 0;
            for (std::size_t k = 1; k < sr.y.size(); ++k) rises += sr.y[k] > sr.y[k - 1] ? 1 : 0;
            const bool decays = sr.y.size() > 1 && sr.y.back() < sr.y.front();
            notes.push_back(fmt::format("{}: FINAL {} FIRST, {} RISE(S) OF {} STEPS{}", to_string(m),
                                        decays ? "<" : ">=", rises, sr.y.size() > 0 ? sr.y.size() - 1 : 0,
                                        rises == 0 ? ", NONINCREASING" : ""));
            series.push_back(std::move(sr));
        }
        if (!series.empty())
            line_chart(plots / "uncertainty_curve.ppm",
                       {"UNCERTAINTY PER ROUND", "ROUND", "MEAN U (PROBE SLICE)", notes}, series);
    }

    // Sensitivity curves.
    if (auto t = read_csv(run_dir / "sensitivity.csv")) {
        for (const std::string param : {"beta", "K"}) {
            std::map<double, std::vector<double>> by_value;
            for (const auto& row : t->rows)
                if (row[t->col("param")] == param)
                    by_value[std::stod(row[t->col("value")])].push_back(std::stod(row[t->col("l1")]));
            if (by_value.empty()) continue;
            Series sr{"AC:GST", {}, {}, {}};
            for (const auto& [v, l] : by_value) {
                double mean = 0.0, ss = 0.0;
                for (double x : l) mean += x;
                mean /= static_cast<double>(l.size());
                for (double x : l) ss += (x - mean) * (x - mean);
                sr.x.push_back(v);
                sr.y.push_back(mean);
                sr.err.push_back(l.size() > 1 ? std::sqrt(ss / static_cast<double>(l.size() - 1)) : 0.0);
            }
            line_chart(plots / fmt::format("sensitivity_{}.ppm", param),
                       {fmt::format("SENSITIVITY TO {}", param), param, "TARGET L1", {}}, {sr});
        }
    } else if (!cfg.sweep_beta.empty() || !cfg.sweep_K.empty()) {
        missing.push_back("sensitivity.csv");
    }
    return missing;
}

} // namespace gstuda::experiment
