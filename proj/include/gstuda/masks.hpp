#pragma once

#include "gstuda/core/image_grid.hpp"

#include <cstddef>
#include <optional>

namespace gstuda {

enum class MaskKind { binary, continuous, attentive };

const char* to_string(MaskKind kind) noexcept;

/// Per-pixel weights in [0, 1] gating the target-domain loss.
struct ReliabilityMask {
    ImageGrid weights;
    MaskKind kind = MaskKind::continuous;
    std::optional<double> rho_used;
    std::optional<double> epsilon_used;

    void validate() const;
    static ReliabilityMask ones(std::size_t height, std::size_t width);
};

/// Linear schedule of the reliable-pixel portion rho.
struct RhoSchedule {
    double rho_start = 0.30;
    double rho_end = 0.80;
    std::size_t total_iters = 1;

    void validate() const;
};

/// rho_start + (rho_end - rho_start) * iter / total_iters. Iterations past
/// the horizon clamp to rho_end (with a warning on stderr).
double rho_at(const RhoSchedule& sched, std::size_t iter);

/// Keeps the floor(rho * N) lowest-uncertainty pixels. Ties are broken by
/// ascending pixel index, so the count is exact for any tie pattern.
/// epsilon is the smallest excluded uncertainty (+inf when nothing is excluded).
ReliabilityMask binary_mask(const ImageGrid& u, double rho);

/// m' = exp(-u), in (0, 1].
ReliabilityMask continuous_mask(const ImageGrid& u);

/// m = a * base, elementwise. base is normally continuous; a binary base
/// gives the attention-with-binary-mask ablation.
ReliabilityMask attentive_mask(const ImageGrid& attention, const ReliabilityMask& base);

} // namespace gstuda
