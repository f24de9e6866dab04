#pragma once

// Training objectives.
//
// Source term:  (1 / (S N)) sum (y - y~)^2
// Target term:  (1 / (T N)) sum [ (m (y^ - y~))^2 / sigma^2 + beta log sigma^2 ]
//
// The mask sits inside the squared norm, so it enters squared: scaling m by
// c scales the data term by c^2. Setting mask_outside_norm weights the
// squared residual by m instead. sigma^2 = exp(clamp(logvar, -10, 10)); the
// logvar gradient is zero outside the clamp band. With intensity_scale L
// both residuals are taken as L (y - y~), so a unit-range network is scored
// in the data's native intensity units.

#include "gstuda/core/errors.hpp"
#include "gstuda/core/image_grid.hpp"
#include "gstuda/masks.hpp"
#include "gstuda/nn/translator.hpp"

#include <cmath>
#include <cstddef>
#include <span>

namespace gstuda {

inline constexpr double kDefaultBeta = 1.0;

struct LossOptions {
    double beta = kDefaultBeta;
    bool mask_outside_norm = false;
    /// Residuals are multiplied by this before squaring; the log-variance is
    /// read in the same units.
    double intensity_scale = 1.0;
    /// Permit an empty source batch (target-only ablation runs).
    bool allow_empty_source = false;
    /// Permit an empty target batch (source pre-training).
    bool allow_empty_target = true;
};

struct LossBreakdown {
    double source_mse = 0.0;         // normalized source term
    double target_data_term = 0.0;   // normalized variance-weighted masked residual
    double target_logvar_term = 0.0; // mean log sigma^2, before beta
    double attention_floor_term = 0.0;
    double beta = kDefaultBeta;
    double total = 0.0;              // source + data + beta * logvar + floor

    void finalize() { total = source_mse + target_data_term + beta * target_logvar_term + attention_floor_term; }
    LossBreakdown& operator+=(const LossBreakdown& o) {
        source_mse += o.source_mse;
        target_data_term += o.target_data_term;
        target_logvar_term += o.target_logvar_term;
        attention_floor_term += o.attention_floor_term;
        finalize();
        return *this;
    }
};

struct TargetTermValue {
    double data = 0.0;
    double logvar = 0.0; // sum of log sigma^2 times scale
};

namespace detail {

inline void check_finite(double v, const char* term, std::size_t n) {
    if (!std::isfinite(v)) throw NonFiniteLoss(term, static_cast<std::ptrdiff_t>(n));
}

} // namespace detail

/// scale * sum (pred - label)^2. Writes d/d(pred) into d_pred when non-empty.
template <class P, class L, class G = double>
double source_term(std::span<const P> pred, std::span<const L> label, double scale, std::span<G> d_pred = {}) {
    if (pred.size() != label.size()) throw DimensionMismatch("source_term: prediction and label differ in size");
    double sum = 0.0;
    for (std::size_t n = 0; n < pred.size(); ++n) {
        const double r = static_cast<double>(pred[n]) - static_cast<double>(label[n]);
        detail::check_finite(r, "source_mse", n);
        sum += r * r;
        if (!d_pred.empty()) d_pred[n] = static_cast<G>(2.0 * scale * r);
    }
    return scale * sum;
}

/// Per-image target term times scale; optional gradients with respect to the
/// prediction, the log-variance and the mask.
template <class P, class V, class Q, class M, class G = double>
TargetTermValue target_term(std::span<const P> pred, std::span<const V> logvar, std::span<const Q> pseudo,
                            std::span<const M> mask, const LossOptions& opt, double scale, std::span<G> d_pred = {},
                            std::span<G> d_logvar = {}, std::span<G> d_mask = {}) {
    const std::size_t N = pred.size();
    if (logvar.size() != N || pseudo.size() != N || mask.size() != N)
        throw DimensionMismatch("target_term: inputs differ in size");
    TargetTermValue out;
    for (std::size_t n = 0; n < N; ++n) {
        const double lv_raw = static_cast<double>(logvar[n]);
        detail::check_finite(lv_raw, "target_logvar", n);
        const double lv = clamp_logvar(lv_raw);
        const double inv_var = std::exp(-lv);
        const double r = opt.intensity_scale * (static_cast<double>(pseudo[n]) - static_cast<double>(pred[n]));
        const double m = static_cast<double>(mask[n]);
        const double w = opt.mask_outside_norm ? m : m * m;
        const double data = w * r * r * inv_var;
        detail::check_finite(data, "target_data", n);
        out.data += data;
        out.logvar += lv;
        if (!d_pred.empty()) d_pred[n] = static_cast<G>(-2.0 * scale * w * r * inv_var * opt.intensity_scale);
        if (!d_logvar.empty()) {
            const bool inside = lv_raw > kLogVarMin && lv_raw < kLogVarMax;
            d_logvar[n] = inside ? static_cast<G>(scale * (opt.beta - data)) : G(0);
        }
        if (!d_mask.empty()) {
            const double dw = opt.mask_outside_norm ? 1.0 : 2.0 * m;
            d_mask[n] = static_cast<G>(scale * dw * r * r * inv_var);
        }
    }
    out.data *= scale;
    out.logvar *= scale;
    return out;
}

/// Mean squared error between two images.
double source_loss(const ImageGrid& pred, const ImageGrid& label);

struct TargetLoss {
    double value = 0.0;
    double data_term = 0.0;
    double logvar_term = 0.0; // mean log sigma^2, before beta
};

TargetLoss target_loss(const ImageGrid& pred, const ImageGrid& logvar, const ImageGrid& pseudo,
                       const ReliabilityMask& mask, double beta, bool mask_outside_norm = false);

struct SourceItem {
    const ImageGrid* pred;
    const ImageGrid* label;
};

struct TargetItem {
    const ImageGrid* pred;
    const ImageGrid* logvar;
    const ImageGrid* pseudo;
    const ReliabilityMask* mask;
};

/// Combined objective over one source and one target batch.
LossBreakdown gst_total(std::span<const SourceItem> source, std::span<const TargetItem> target,
                        const LossOptions& options);

} // namespace gstuda
