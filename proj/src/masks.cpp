#include "gstuda/masks.hpp"

#include "gstuda/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <vector>

namespace gstuda {

const char* to_string(MaskKind kind) noexcept {
    switch (kind) {
    case MaskKind::binary: return "binary";
    case MaskKind::continuous: return "continuous";
    case MaskKind::attentive: return "attentive";
    }
    return "?";
}

void ReliabilityMask::validate() const {
    for (std::size_t n = 0; n < weights.size(); ++n) {
        const double w = weights[n];
        if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument("ReliabilityMask: weight outside [0,1] at pixel " + std::to_string(n));
        if (kind == MaskKind::binary && w != 0.0 && w != 1.0)
            throw InvalidArgument("ReliabilityMask: binary mask holds a non-binary weight");
    }
    if (kind == MaskKind::binary && (!rho_used || !epsilon_used))
        throw InvalidArgument("ReliabilityMask: binary mask must record rho and epsilon");
}

ReliabilityMask ReliabilityMask::ones(std::size_t height, std::size_t width) {
    return {ImageGrid::filled(height, width, 1.0, 0.0, 1.0), MaskKind::continuous, std::nullopt, std::nullopt};
}

void RhoSchedule::validate() const {
    if (!(rho_start >= 0.0 && rho_start <= rho_end && rho_end <= 1.0))
        throw InvalidArgument("RhoSchedule: need 0 <= rho_start <= rho_end <= 1");
    if (total_iters == 0) throw InvalidArgument("RhoSchedule: total_iters must be positive");
}

double rho_at(const RhoSchedule& sched, std::size_t iter) {
    sched.validate();
    if (iter > sched.total_iters) {
        std::clog << "warning: rho_at iteration " << iter << " beyond horizon " << sched.total_iters
                  << ", clamping to rho_end\n";
        return sched.rho_end;
    }
    return sched.rho_start +
           (sched.rho_end - sched.rho_start) * static_cast<double>(iter) / static_cast<double>(sched.total_iters);
}

ReliabilityMask binary_mask(const ImageGrid& u, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("binary_mask: rho must be in [0,1]");
    const std::size_t N = u.size();
    const auto keep = static_cast<std::size_t>(std::floor(rho * static_cast<double>(N)));

    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });

    ImageGrid w(u.height(), u.width(), 0.0, 1.0);
    for (std::size_t i = 0; i < keep; ++i) w[order[i]] = 1.0;
    const double epsilon = keep < N ? u[order[keep]] : std::numeric_limits<double>::infinity();
    return {std::move(w), MaskKind::binary, rho, epsilon};
}

ReliabilityMask continuous_mask(const ImageGrid& u) {
    ImageGrid w(u.height(), u.width(), 0.0, 1.0);
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (!(u[n] >= 0.0)) throw InvalidArgument("continuous_mask: uncertainty must be nonnegative");
        w[n] = std::exp(-u[n]);
    }
    return {std::move(w), MaskKind::continuous, std::nullopt, std::nullopt};
}

ReliabilityMask attentive_mask(const ImageGrid& attention, const ReliabilityMask& base) {
    require_same_shape(attention, base.weights, "attentive_mask");
    if (base.kind == MaskKind::attentive) throw InvalidArgument("attentive_mask: base mask is already attentive");
    ImageGrid w(attention.height(), attention.width(), 0.0, 1.0);
    for (std::size_t n = 0; n < w.size(); ++n) {
        const double a = attention[n];
        if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("attentive_mask: attention outside [0,1]");
        w[n] = a * base.weights[n];
    }
    return {std::move(w), MaskKind::attentive, base.rho_used, base.epsilon_used};
}

} // namespace gstuda
