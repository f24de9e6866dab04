#pragma once

// Experiment configuration file: one `key = value` per line, `#` starts a
// comment, blank lines are ignored. Keys are dotted paths (task.*, source.*,
// target.*, train.*, sweep.*) plus methods, seeds and output_dir. Lists are
// comma separated. Unknown keys and malformed values are errors that cite
// the line number.

#include "gstuda/core/errors.hpp"
#include "gstuda/synth/synth.hpp"
#include "gstuda/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gstuda::experiment {

enum class Method { no_uda, ac_gst, ac_gst_no_attn, ac_gst_c, bm_gst, bm_gst_a, bm_gst_e, target_supervised };

/// Table order: baseline, full method, ablations, upper bound.
inline constexpr Method kAllMethods[] = {Method::no_uda,   Method::ac_gst,   Method::ac_gst_no_attn,
                                         Method::ac_gst_c, Method::bm_gst,   Method::bm_gst_a,
                                         Method::bm_gst_e, Method::target_supervised};

const char* to_string(Method m) noexcept;
Method method_from_string(const std::string& s);

/// Training configuration of one method derived from the shared base.
TrainConfig method_config(Method m, const TrainConfig& base);

class ConfigError : public InvalidArgument {
public:
    ConfigError(std::string origin, std::size_t line, const std::string& what)
        : InvalidArgument(origin + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ExperimentConfig {
    synth::TaskSpec task;
    TrainConfig train;
    std::vector<Method> methods;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path output_dir;
    std::vector<double> sweep_beta;    // extra beta values for the full method
    std::vector<std::size_t> sweep_K;  // extra K values for the full method
    bool save_checkpoints = true;

    ExperimentConfig();
    void validate() const;
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& file);

/// Every key with its effective value; parse_config(resolved_config(c)) == c.
std::string resolved_config(const ExperimentConfig& cfg);

std::vector<std::uint64_t> parse_seed_list(const std::string& csv);
std::vector<Method> parse_method_list(const std::string& csv);

} // namespace gstuda::experiment
