#include "gstuda/objective.hpp"

#include "gstuda/core/errors.hpp"
#include "gstuda/core/rng.hpp"

#include <vector>

namespace gstuda {

template <class T>
LossBreakdown gst_objective(const BasicTranslator<T>& translator, const BasicAttention<T>* attention,
                            std::span<const SourceExample> source, std::span<const TargetExample> target,
                            const ObjectiveOptions& options, std::span<T> grad_w, std::span<T> grad_theta) {
    if (source.empty() && target.empty()) throw InvalidArgument("gst_objective: both batches are empty");
    if (source.empty() && !options.loss.allow_empty_source)
        throw InvalidArgument("gst_objective: empty source batch requires allow_empty_source");
    if (options.use_attention && attention == nullptr)
        throw InvalidArgument("gst_objective: attention requested without an attention model");
    if (grad_w.size() != translator.net().params().size())
        throw DimensionMismatch("gst_objective: translator gradient buffer size");
    if (options.use_attention && grad_theta.size() != attention->net().params().size())
        throw DimensionMismatch("gst_objective: attention gradient buffer size");

    using Net = typename BasicTranslator<T>::Net;
    const Net& net = translator.net();
    typename Net::Cache cache;
    LossBreakdown b;
    b.beta = options.loss.beta;
    std::vector<double> d_pred, d_lv, d_mask;
    std::vector<T> g_pred, g_lv;

    for (std::size_t i = 0; i < source.size(); ++i) {
        const ImageGrid& x = *source[i].input;
        const ImageGrid& y = *source[i].label;
        require_same_shape(x, y, "gst_objective source");
        const std::size_t N = x.size();
        const double scale = 1.0 / static_cast<double>(source.size() * N);
        const auto buf = to_buffer<T>(x);
        const bool calib = options.calibrate_source_logvar;
        net.forward(buf, x.height(), x.width(),
                    {options.stochastic, derive_seed({options.dropout_seed, 1, i}), calib}, cache);
        d_pred.assign(N, 0.0);
        const double L = options.loss.intensity_scale;
        b.source_mse +=
            source_term(std::span<const T>(cache.output.data), y.values(), scale * L * L, std::span<double>(d_pred));
        g_pred.assign(d_pred.begin(), d_pred.end());
        g_lv.assign(N, T(0));
        if (calib) {
            for (std::size_t n = 0; n < N; ++n) {
                const double lv_raw = static_cast<double>(cache.log_variance.data[n]);
                if (lv_raw <= kLogVarMin || lv_raw >= kLogVarMax) continue;
                const double r = L * (static_cast<double>(cache.output.data[n]) - y[n]);
                g_lv[n] = static_cast<T>(scale * (options.loss.beta - r * r * std::exp(-lv_raw)));
            }
        }
        net.backward(cache, g_pred, g_lv, grad_w);
    }

    using ANet = typename BasicAttention<T>::Net;
    typename ANet::Cache acache;
    std::vector<double> mask;
    std::vector<T> g_attn;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const ImageGrid& x = *target[i].input;
        const ImageGrid& q = *target[i].pseudo;
        const ImageGrid& base = *target[i].base_mask;
        require_same_shape(x, q, "gst_objective target");
        require_same_shape(x, base, "gst_objective target");
        const std::size_t N = x.size();
        const double scale = 1.0 / static_cast<double>(target.size() * N);
        const auto buf = to_buffer<T>(x);
        net.forward(buf, x.height(), x.width(), {options.stochastic, derive_seed({options.dropout_seed, 2, i}), true},
                    cache);
        mask.assign(base.values().begin(), base.values().end());
        if (options.use_attention) {
            attention->net().forward(buf, x.height(), x.width(), {false, 0, false}, acache);
            for (std::size_t n = 0; n < N; ++n) mask[n] *= static_cast<double>(acache.output.data[n]);
        }
        d_pred.assign(N, 0.0);
        d_lv.assign(N, 0.0);
        d_mask.assign(options.use_attention ? N : 0, 0.0);
        const auto v = target_term(std::span<const T>(cache.output.data), std::span<const T>(cache.log_variance.data),
                                   q.values(), std::span<const double>(mask), options.loss, scale,
                                   std::span<double>(d_pred), std::span<double>(d_lv), std::span<double>(d_mask));
        b.target_data_term += v.data;
        b.target_logvar_term += v.logvar;
        g_pred.assign(d_pred.begin(), d_pred.end());
        g_lv.assign(d_lv.begin(), d_lv.end());
        net.backward(cache, g_pred, g_lv, grad_w);

        if (options.use_attention) {
            double mean_a = 0.0;
            for (std::size_t n = 0; n < N; ++n) mean_a += static_cast<double>(acache.output.data[n]);
            mean_a /= static_cast<double>(N);
            const double lam = options.attention_floor_lambda / static_cast<double>(target.size());
            const double dev = mean_a - options.attention_floor_target;
            b.attention_floor_term += lam * dev * dev;
            const double d_floor = 2.0 * lam * dev / static_cast<double>(N);
            g_attn.resize(N);
            for (std::size_t n = 0; n < N; ++n) g_attn[n] = static_cast<T>(d_mask[n] * base[n] + d_floor);
            attention->net().backward(acache, g_attn, {}, grad_theta);
        }
    }
    b.finalize();
    if (!std::isfinite(b.total)) throw NonFiniteLoss("gst_total");
    return b;
}

template LossBreakdown gst_objective<float>(const BasicTranslator<float>&, const BasicAttention<float>*,
                                            std::span<const SourceExample>, std::span<const TargetExample>,
                                            const ObjectiveOptions&, std::span<float>, std::span<float>);
template LossBreakdown gst_objective<double>(const BasicTranslator<double>&, const BasicAttention<double>*,
                                             std::span<const SourceExample>, std::span<const TargetExample>,
                                             const ObjectiveOptions&, std::span<double>, std::span<double>);

} // namespace gstuda
