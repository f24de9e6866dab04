#pragma once

#include "gstuda/core/image_grid.hpp"
#include "gstuda/nn/unet.hpp"

#include <cstdint>
#include <string>

namespace gstuda {

// The variance head predicts log(sigma^2) rather than sigma^2. Every consumer
// (loss, aleatoric uncertainty) exponentiates after clamping to this band,
// which keeps sigma^2 strictly positive and finite.
inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

double clamp_logvar(double logvar) noexcept;
/// sigma^2 = exp(clamp(logvar)).
double variance_from_logvar(double logvar) noexcept;

struct TranslatorArchitecture {
    std::size_t depth = 3;
    std::size_t base_channels = 8;
    double dropout_rate = 0.2;

    nn::UNetConfig unet() const;
};

struct TranslatorOutput {
    ImageGrid mean;   // predicted image, same range as the input
    ImageGrid logvar; // per-pixel log sigma^2
};

/// Dual-head translator: mean image and log-variance map from one input.
template <class T>
class BasicTranslator {
public:
    using Net = nn::UNet<T>;

    BasicTranslator(const TranslatorArchitecture& arch, std::uint64_t init_seed);

    const TranslatorArchitecture& architecture() const noexcept { return arch_; }
    Net& net() noexcept { return net_; }
    const Net& net() const noexcept { return net_; }

    /// stochastic = true samples dropout masks from rng_seed (MC dropout);
    /// stochastic = false is the deterministic inference path.
    TranslatorOutput forward(const ImageGrid& x, bool stochastic, std::uint64_t rng_seed) const;

private:
    TranslatorArchitecture arch_;
    Net net_;
};

using TranslatorModel = BasicTranslator<float>;

struct AttentionArchitecture {
    std::size_t depth = 3;
    std::size_t base_channels = 8;

    nn::UNetConfig unet() const;
};

/// Attention network mapping an input slice to a per-pixel map in [0, 1].
/// No dropout; the output passes through a logistic unit.
template <class T>
class BasicAttention {
public:
    using Net = nn::UNet<T>;

    BasicAttention(const AttentionArchitecture& arch, std::uint64_t init_seed);

    const AttentionArchitecture& architecture() const noexcept { return arch_; }
    Net& net() noexcept { return net_; }
    const Net& net() const noexcept { return net_; }

    ImageGrid attend(const ImageGrid& x) const;

private:
    AttentionArchitecture arch_;
    Net net_;
};

using AttentionModel = BasicAttention<float>;

template <class T>
std::vector<T> to_buffer(const ImageGrid& g) {
    return std::vector<T>(g.values().begin(), g.values().end());
}

} // namespace gstuda
