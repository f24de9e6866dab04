#pragma once

// MC-dropout ensembles and the epistemic / aleatoric decomposition.
//
//   mu       = mean_k y_k
//   u_e      = mean_k (y_k - mu)^2          (biased, divide by K)
//   u_a      = mean_k sigma_k^2,  sigma^2 = exp(clamp(logvar))
//   u        = u_e + u_a

#include "gstuda/core/image_grid.hpp"
#include "gstuda/nn/translator.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace gstuda {

inline constexpr std::size_t kDefaultMcSamples = 20;

struct DropoutEnsemble {
    std::vector<TranslatorOutput> members;
    std::string input_ref;

    std::size_t K() const noexcept { return members.size(); }
    /// Throws unless K >= 2 and all members share one shape.
    void validate() const;
};

struct UncertaintyMaps {
    ImageGrid epistemic;
    ImageGrid aleatoric;
    ImageGrid total;
    ImageGrid mean_prediction;
};

/// Dropout seed of ensemble member k; one integer reproduces the ensemble.
std::uint64_t member_seed(std::uint64_t seed, std::size_t k) noexcept;

template <class T>
DropoutEnsemble mc_ensemble(const BasicTranslator<T>& model, const ImageGrid& x, std::size_t K, std::uint64_t seed,
                            std::string input_ref = {});

ImageGrid ensemble_mean(const DropoutEnsemble& ens);
ImageGrid epistemic(const DropoutEnsemble& ens);
ImageGrid aleatoric(const DropoutEnsemble& ens);

/// Assembles u = u_e + u_a together with the pseudo-label source mu.
UncertaintyMaps total(const ImageGrid& u_e, const ImageGrid& u_a, const ImageGrid& mean_prediction);

inline UncertaintyMaps decompose(const DropoutEnsemble& ens) {
    return total(epistemic(ens), aleatoric(ens), ensemble_mean(ens));
}

} // namespace gstuda
