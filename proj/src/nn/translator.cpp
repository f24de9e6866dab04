#include "gstuda/nn/translator.hpp"

#include "gstuda/core/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gstuda {

double clamp_logvar(double logvar) noexcept { return std::clamp(logvar, kLogVarMin, kLogVarMax); }
double variance_from_logvar(double logvar) noexcept { return std::exp(clamp_logvar(logvar)); }

nn::UNetConfig TranslatorArchitecture::unet() const {
    nn::UNetConfig c;
    c.depth = depth;
    c.base_channels = base_channels;
    c.dropout_rate = dropout_rate;
    c.variance_branch = true;
    c.sigmoid_output = false;
    return c;
}

nn::UNetConfig AttentionArchitecture::unet() const {
    nn::UNetConfig c;
    c.depth = depth;
    c.base_channels = base_channels;
    c.dropout_rate = 0.0;
    c.variance_branch = false;
    c.sigmoid_output = true;
    return c;
}

namespace {

template <class T>
ImageGrid to_grid(const nn::Tensor3<T>& t, double lo, double hi) {
    std::vector<double> v(t.data.begin(), t.data.end());
    return ImageGrid(t.height, t.width, std::move(v), lo, hi);
}

} // namespace

template <class T>
BasicTranslator<T>::BasicTranslator(const TranslatorArchitecture& arch, std::uint64_t init_seed)
    : arch_(arch), net_(arch.unet(), init_seed) {}

template <class T>
TranslatorOutput BasicTranslator<T>::forward(const ImageGrid& x, bool stochastic, std::uint64_t rng_seed) const {
    typename Net::Cache cache;
    const auto buf = to_buffer<T>(x);
    net_.forward(buf, x.height(), x.width(), {stochastic, stochastic ? rng_seed : 0, true}, cache);
    for (std::size_t n = 0; n < cache.output.size(); ++n) {
        if (!std::isfinite(static_cast<double>(cache.output.data[n])) ||
            !std::isfinite(static_cast<double>(cache.log_variance.data[n])))
            throw NonFiniteLoss("translator.forward", static_cast<std::ptrdiff_t>(n));
    }
    return {to_grid(cache.output, x.range_lo(), x.range_hi()), to_grid(cache.log_variance, kLogVarMin, kLogVarMax)};
}

template <class T>
BasicAttention<T>::BasicAttention(const AttentionArchitecture& arch, std::uint64_t init_seed)
    : arch_(arch), net_(arch.unet(), init_seed) {}

template <class T>
ImageGrid BasicAttention<T>::attend(const ImageGrid& x) const {
    typename Net::Cache cache;
    const auto buf = to_buffer<T>(x);
    net_.forward(buf, x.height(), x.width(), {false, 0, false}, cache);
    return to_grid(cache.output, 0.0, 1.0);
}

template class BasicTranslator<float>;
template class BasicTranslator<double>;
template class BasicAttention<float>;
template class BasicAttention<double>;

} // namespace gstuda
