#pragma once

// Batch objective with gradients for the translator (w) and the attention
// network (theta). Used by the trainer and by the finite-difference tests.

#include "gstuda/core/image_grid.hpp"
#include "gstuda/loss.hpp"
#include "gstuda/nn/translator.hpp"

#include <cstdint>
#include <span>

namespace gstuda {

struct SourceExample {
    const ImageGrid* input;
    const ImageGrid* label;
};

/// Target slice with its fixed pseudo label and base mask. With attention
/// enabled the effective mask is attend(input) * base, recomputed live.
struct TargetExample {
    const ImageGrid* input;
    const ImageGrid* pseudo;
    const ImageGrid* base_mask;
};

struct ObjectiveOptions {
    LossOptions loss;
    bool use_attention = false;
    /// lambda * (mean(a) - target)^2 per target slice, averaged over the batch.
    double attention_floor_lambda = 0.0;
    double attention_floor_target = 0.5;
    /// Fits the log-variance head on source slices with the prediction held
    /// fixed: (r^2 / sigma^2 + beta log sigma^2) with r treated as a constant.
    /// Its value is not part of LossBreakdown::total.
    bool calibrate_source_logvar = false;
    /// Dropout in the loss forward (pre-training only).
    bool stochastic = false;
    std::uint64_t dropout_seed = 0;
};

/// Evaluates the objective and accumulates its gradient into grad_w and,
/// when attention is used, grad_theta. attention may be null otherwise.
template <class T>
LossBreakdown gst_objective(const BasicTranslator<T>& translator, const BasicAttention<T>* attention,
                            std::span<const SourceExample> source, std::span<const TargetExample> target,
                            const ObjectiveOptions& options, std::span<T> grad_w, std::span<T> grad_theta);

} // namespace gstuda
