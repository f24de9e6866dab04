#pragma once

// Experiment driver behind the command-line tool.
//
// Run directory layout:
//   config.resolved.txt          every key with its effective value
//   data/{source,target}/        generated datasets
//   pretrain/seed_<s>/           source pre-training checkpoint and log
//   cells/<method>__seed_<s>/    one training cell
//   sweep/<param>_<v>__seed_<s>/ sensitivity cells (full method)
//   report.csv, report.md, significance.csv, sensitivity.csv, cells.csv

#include "gstuda/experiment/config.hpp"
#include "gstuda/metrics.hpp"
#include "gstuda/synth/synth.hpp"
#include "gstuda/trainer.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace gstuda::experiment {

/// Worker cap: GSTUDA_THREADS when set and positive, else hardware concurrency.
std::size_t worker_count();

struct RunOptions {
    bool force = false;
    std::size_t workers = 0; // 0 = worker_count()
    std::ostream* progress = nullptr;
};

struct CellResult {
    Method method = Method::no_uda;
    std::uint64_t seed = 0;
    std::string sweep_param; // empty for the main grid
    double sweep_value = 0.0;
    bool ok = false;
    std::string error;
    MethodMetrics metrics;
    std::vector<RoundRecord> history;

    std::string dir_name() const;
};

struct RunSummary {
    std::vector<CellResult> cells;
    std::vector<std::string> warnings;
    std::size_t failures() const noexcept;
};

/// Generates and persists both datasets under out/data. Refuses to touch an
/// existing non-empty directory unless force is set.
synth::Task cmd_gen(const ExperimentConfig& cfg, const std::filesystem::path& out, bool force);

/// pretrain -> adapt -> evaluate for every (method, seed) cell, then the
/// sensitivity sweep, then the reports. Cell failures are recorded and the
/// remaining cells still run.
RunSummary cmd_run(const ExperimentConfig& cfg, const RunOptions& options);

/// Re-scores the final checkpoint of every cell of a finished run against
/// the stored target set; writes eval/report.csv and eval/report.md.
std::vector<AggregateRow> cmd_eval(const std::filesystem::path& run_dir);

/// Renders sample grids, uncertainty and mask maps, the uncertainty-per-round
/// curve and sensitivity curves into run_dir/plots. Returns the names of
/// artifacts that were missing; throws when the directory holds no run.
std::vector<std::string> cmd_plot(const std::filesystem::path& run_dir);

/// Reports for a finished set of cells.
void write_reports(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunSummary& summary);

} // namespace gstuda::experiment
