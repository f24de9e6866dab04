#pragma once

// Source pre-training and the alternating self-training loop:
//   step 1: frozen translator, K MC-dropout passes per target slice ->
//           pseudo label (ensemble mean) and reliability mask
//   step 2: pseudo labels and base masks fixed; translator and attention
//           updated on source MSE + masked heteroscedastic target loss,
//           dropout off.

#include "gstuda/core/dataset.hpp"
#include "gstuda/loss.hpp"
#include "gstuda/masks.hpp"
#include "gstuda/nn/adam.hpp"
#include "gstuda/nn/translator.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gstuda {

enum class MaskMode { binary, continuous, attentive, attentive_binary };
enum class UncertaintyMode { both, epistemic_only, aleatoric_only };

const char* to_string(MaskMode m) noexcept;
const char* to_string(UncertaintyMode m) noexcept;
MaskMode mask_mode_from_string(const std::string& s);
UncertaintyMode uncertainty_mode_from_string(const std::string& s);

inline bool uses_attention(MaskMode m) noexcept {
    return m == MaskMode::attentive || m == MaskMode::attentive_binary;
}

struct TrainConfig {
    double learning_rate = 1e-3;
    double momentum_beta1 = 0.5;
    double momentum_beta2 = 0.999;
    std::size_t batch_size = 16;
    std::size_t K = 20;
    double beta = 1.0;
    MaskMode mask_mode = MaskMode::attentive;
    UncertaintyMode uncertainty_mode = UncertaintyMode::both;
    std::size_t rounds = 10;
    std::size_t iters_per_round = 50;
    std::size_t pretrain_epochs = 30;
    std::uint64_t seed = 0;

    TranslatorArchitecture arch;
    AttentionArchitecture attention_arch;

    double rho_start = 0.30;
    double rho_end = 0.80;
    /// Step rho once per round instead of per optimizer iteration.
    bool rho_per_round = false;
    bool mask_outside_norm = false;
    double attention_floor_lambda = 10.0;
    double attention_floor_target = 0.5;
    /// Divisor applied to u before m' = exp(-u). 0 selects the mean total
    /// uncertainty of the first step-1 pass.
    double uncertainty_scale = 0.0;
    /// Units of the loss residuals and of sigma^2. 0 selects the intensity
    /// range span of the data (255 for 8-bit-like images); 1 scores in the
    /// network's unit range.
    double intensity_scale = 0.0;
    /// Target slice whose uncertainty is tracked across rounds; it is
    /// excluded from step-2 batches.
    std::size_t probe_slice = 0;
    bool holdout_probe = true;
    /// Worker threads for step-1 ensembles.
    std::size_t threads = 1;

    void validate() const;
    nn::AdamConfig adam() const;
    /// One key=value per line, every field.
    std::string describe() const;
};

/// Optional artifact destination; empty dir disables file output.
struct TrainerIo {
    std::filesystem::path dir;
    bool enabled() const noexcept { return !dir.empty(); }
};

struct PretrainResult {
    std::vector<double> epoch_loss; // mean source MSE per epoch (unit range)
};

/// Supervised source training. Restores the last finite parameters and
/// throws NonFiniteLoss on divergence.
PretrainResult pretrain(TranslatorModel& model, const Dataset& source, const TrainConfig& cfg,
                        const TrainerIo& io = {});

struct LogRow {
    std::size_t iter = 0;
    LossBreakdown loss;
    double rho = 0.0;
    double mean_u = 0.0;
};

struct RoundRecord {
    std::size_t round = 0;
    double rho = 0.0;
    double mean_u = 0.0;  // mean total uncertainty over all target slices
    double probe_u = 0.0; // mean total uncertainty on the probe slice
    double mean_mask = 0.0;
};

struct AdaptationState {
    std::size_t round = 0;
    std::size_t iter = 0;
    double uncertainty_scale = 0.0;
    /// Units of the loss residuals and of sigma^2. 0 selects the intensity
    /// range span of the data (255 for 8-bit-like images); 1 scores in the
    /// network's unit range.
    double intensity_scale = 0.0;

    // Index-aligned with the target dataset; refreshed together by step 1.
    std::vector<ImageGrid> pseudo_labels;   // unit range
    std::vector<ReliabilityMask> base_masks; // binary or continuous
    std::vector<ReliabilityMask> masks;      // effective mask at step 1 (attention applied)
    std::vector<ImageGrid> uncertainty;      // total u, unit range

    nn::Adam<float> optimizer_w;
    nn::Adam<float> optimizer_theta;

    std::vector<LogRow> log;
    std::vector<RoundRecord> history; // one per step 1, plus a final entry after the last round
};

AdaptationState make_state(const TranslatorModel& model, const AttentionModel* attention, const TrainConfig& cfg);

/// rho used by the step-1 pass at the current state.
double current_rho(const TrainConfig& cfg, const AdaptationState& state);

/// Step 1. Frozen weights; pseudo labels, uncertainty and masks for every target slice.
void step1_generate(const TranslatorModel& model, const AttentionModel* attention, const Dataset& target,
                    const TrainConfig& cfg, AdaptationState& state);

/// Step 2. iters_per_round optimizer steps on the combined objective.
void step2_retrain(TranslatorModel& model, AttentionModel* attention, const Dataset& source, const Dataset& target,
                   const TrainConfig& cfg, AdaptationState& state);

/// rounds x (step 1; step 2). attention may be null unless the mask mode uses it.
AdaptationState adapt(TranslatorModel& model, AttentionModel* attention, const Dataset& source,
                      const Dataset& target, const TrainConfig& cfg, const TrainerIo& io = {});

/// Upper-bound reference: the same number of steps as adapt(), but the
/// target slices are supervised with their true labels.
void train_supervised(TranslatorModel& model, const Dataset& source, const Dataset& target_paired,
                      const TrainConfig& cfg);

/// Deterministic prediction mapped back to the input's intensity range.
ImageGrid predict(const TranslatorModel& model, const ImageGrid& x);

void write_training_log(const std::filesystem::path& file, const std::vector<LogRow>& log);

} // namespace gstuda
