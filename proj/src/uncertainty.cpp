#include "gstuda/uncertainty.hpp"

#include "gstuda/core/errors.hpp"
#include "gstuda/core/rng.hpp"

namespace gstuda {

namespace {

ImageGrid like(const ImageGrid& g, double lo, double hi) { return ImageGrid(g.height(), g.width(), lo, hi); }

} // namespace

void DropoutEnsemble::validate() const {
    if (members.size() < 2) throw InvalidArgument("DropoutEnsemble: K >= 2 members required for epistemic uncertainty");
    for (const auto& m : members) {
        require_same_shape(m.mean, members.front().mean, "DropoutEnsemble");
        require_same_shape(m.logvar, members.front().mean, "DropoutEnsemble");
    }
}

std::uint64_t member_seed(std::uint64_t seed, std::size_t k) noexcept { return derive_seed({seed, 0x6d63, k}); }

template <class T>
DropoutEnsemble mc_ensemble(const BasicTranslator<T>& model, const ImageGrid& x, std::size_t K, std::uint64_t seed,
                            std::string input_ref) {
    if (K < 2) throw InvalidArgument("mc_ensemble: K must be >= 2, got " + std::to_string(K));
    DropoutEnsemble ens;
    ens.input_ref = std::move(input_ref);
    ens.members.reserve(K);
    for (std::size_t k = 0; k < K; ++k) ens.members.push_back(model.forward(x, true, member_seed(seed, k)));
    return ens;
}

template DropoutEnsemble mc_ensemble<float>(const BasicTranslator<float>&, const ImageGrid&, std::size_t,
                                            std::uint64_t, std::string);
template DropoutEnsemble mc_ensemble<double>(const BasicTranslator<double>&, const ImageGrid&, std::size_t,
                                             std::uint64_t, std::string);

ImageGrid ensemble_mean(const DropoutEnsemble& ens) {
    ens.validate();
    const ImageGrid& first = ens.members.front().mean;
    ImageGrid mu = like(first, first.range_lo(), first.range_hi());
    for (const auto& m : ens.members)
        for (std::size_t n = 0; n < mu.size(); ++n) mu[n] += m.mean[n];
    const double inv = 1.0 / static_cast<double>(ens.K());
    for (auto& v : mu.values()) v *= inv;
    return mu;
}

ImageGrid epistemic(const DropoutEnsemble& ens) {
    const ImageGrid mu = ensemble_mean(ens);
    ImageGrid ue = like(mu, 0.0, 1.0);
    for (const auto& m : ens.members) {
        for (std::size_t n = 0; n < ue.size(); ++n) {
            const double d = m.mean[n] - mu[n];
            ue[n] += d * d;
        }
    }
    const double inv = 1.0 / static_cast<double>(ens.K());
    for (auto& v : ue.values()) v *= inv;
    return ue;
}

ImageGrid aleatoric(const DropoutEnsemble& ens) {
    ens.validate();
    ImageGrid ua = like(ens.members.front().mean, 0.0, 1.0);
    for (const auto& m : ens.members)
        for (std::size_t n = 0; n < ua.size(); ++n) ua[n] += variance_from_logvar(m.logvar[n]);
    const double inv = 1.0 / static_cast<double>(ens.K());
    for (auto& v : ua.values()) v *= inv;
    return ua;
}

UncertaintyMaps total(const ImageGrid& u_e, const ImageGrid& u_a, const ImageGrid& mean_prediction) {
    require_same_shape(u_e, u_a, "uncertainty total");
    require_same_shape(u_e, mean_prediction, "uncertainty total");
    ImageGrid u = like(u_e, 0.0, 1.0);
    for (std::size_t n = 0; n < u.size(); ++n) u[n] = u_e[n] + u_a[n];
    return {u_e, u_a, std::move(u), mean_prediction};
}

} // namespace gstuda
