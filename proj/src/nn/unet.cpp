#include "gstuda/nn/unet.hpp"

#include "gstuda/core/errors.hpp"
#include "gstuda/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace gstuda::nn {

namespace {

template <class T>
void add_into(Tensor3<T>& dst, const T* src) {
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src[i];
}

template <class T>
void zero_like(Tensor3<T>& t, const Tensor3<T>& shape) {
    t.resize(shape.channels, shape.height, shape.width);
    t.zero();
}

} // namespace

void UNetConfig::validate() const {
    if (depth < 1 || depth > 6) throw InvalidArgument("UNetConfig: depth must be in [1, 6]");
    if (base_channels < 1) throw InvalidArgument("UNetConfig: base_channels must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("UNetConfig: dropout_rate must be in [0, 1)");
}

std::string UNetConfig::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "depth=" << depth << ";base_channels=" << base_channels << ";dropout_rate=" << dropout_rate
       << ";variance_branch=" << (variance_branch ? 1 : 0) << ";sigmoid_output=" << (sigmoid_output ? 1 : 0);
    return os.str();
}

template <class T>
typename UNet<T>::Layer UNet<T>::add_layer(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel) {
    Layer l;
    l.shape = {in, out, kernel};
    l.weight = params_.add(name + ".weight", {out, in, kernel, kernel});
    l.bias = params_.add(name + ".bias", {out});
    return l;
}

template <class T>
std::size_t UNet<T>::var_levels() const noexcept {
    return config_.variance_branch ? std::min<std::size_t>(2, config_.depth) : 0;
}

template <class T>
UNet<T>::UNet(const UNetConfig& config, std::uint64_t init_seed) : config_(config) {
    config_.validate();
    const std::size_t D = config_.depth;
    for (std::size_t l = 0; l < D; ++l)
        enc_.push_back(add_layer("enc" + std::to_string(l), l == 0 ? 1 : level_channels(l - 1), level_channels(l), 3));
    bottleneck_ = add_layer("bottleneck", level_channels(D - 1), level_channels(D - 1), 3);

    dec_.resize(D);
    for (std::size_t k = D; k-- > 0;) {
        const std::size_t prev = k == D - 1 ? level_channels(D - 1) : stage_out_channels(k + 1);
        dec_[k] = add_layer("dec" + std::to_string(k), prev + level_channels(k), stage_out_channels(k), 3);
    }
    head_ = add_layer("head", config_.base_channels, 1, 1);

    const std::size_t V = var_levels();
    var_dec_.resize(V);
    for (std::size_t k = V; k-- > 0;) {
        const std::size_t prev = k == D - 1 ? level_channels(D - 1) : stage_out_channels(k + 1);
        var_dec_[k] = add_layer("var_dec" + std::to_string(k), prev + level_channels(k), stage_out_channels(k), 3);
    }
    if (config_.variance_branch) var_head_ = add_layer("var_head", config_.base_channels, 1, 1);

    // Scaled Gaussian init: He-style for leaky-ReLU convs, unit-gain for heads.
    std::mt19937_64 rng(derive_seed({init_seed, 0x696e6974}));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto init = [&](const Layer& l, double gain) {
        const double fan_in = static_cast<double>(l.shape.patch());
        const double sd = std::sqrt(gain / fan_in);
        T* w = params_.data() + l.weight;
        for (std::size_t i = 0; i < l.shape.weight_count(); ++i) w[i] = static_cast<T>(sd * normal(rng));
    };
    const double relu_gain = 2.0 / (1.0 + kLeakySlope * kLeakySlope);
    for (const auto& l : enc_) init(l, relu_gain);
    init(bottleneck_, relu_gain);
    for (std::size_t k = D; k-- > 0;) init(dec_[k], relu_gain);
    init(head_, 1.0);
    for (std::size_t k = V; k-- > 0;) init(var_dec_[k], relu_gain);
    if (config_.variance_branch) init(var_head_, 0.1);
}

template <class T>
void UNet<T>::check_input(std::size_t height, std::size_t width) const {
    const std::size_t f = std::size_t{1} << config_.depth;
    if (height == 0 || width == 0 || height % f != 0 || width % f != 0)
        throw InvalidArgument("input " + std::to_string(height) + "x" + std::to_string(width) +
                              " is not divisible by 2^depth = " + std::to_string(f));
}

template <class T>
void UNet<T>::run_stage(const Layer& layer, const Tensor3<T>& prev, const Tensor3<T>& skip, Stage& st, bool dropout,
                        std::uint64_t seed) const {
    upsample2_forward(prev, st.up);
    concat_channels(st.up, skip, st.cat);
    conv_forward(layer.shape, params_.data() + layer.weight, params_.data() + layer.bias, st.cat, st.out, st.cols);
    leaky_relu_forward(st.out);
    if (dropout) dropout_forward(st.out, config_.dropout_rate, seed, st.mask);
    else st.mask.clear();
}

template <class T>
void UNet<T>::forward(std::span<const T> image, std::size_t height, std::size_t width, const Pass& pass,
                      Cache& c) const {
    check_input(height, width);
    if (image.size() != height * width) throw DimensionMismatch("UNet::forward: image size does not match shape");
    const std::size_t D = config_.depth;
    const T* P = params_.data();
    const bool dropout = pass.stochastic && config_.dropout_rate > 0.0;

    c.input.resize(1, height, width);
    std::copy(image.begin(), image.end(), c.input.data.begin());
    c.enc_out.resize(D);
    c.pooled.resize(D);
    c.enc_cols.resize(D);
    for (std::size_t l = 0; l < D; ++l) {
        const Tensor3<T>& in = l == 0 ? c.input : c.pooled[l - 1];
        conv_forward(enc_[l].shape, P + enc_[l].weight, P + enc_[l].bias, in, c.enc_out[l], c.enc_cols[l]);
        leaky_relu_forward(c.enc_out[l]);
        avgpool2_forward(c.enc_out[l], c.pooled[l]);
    }
    conv_forward(bottleneck_.shape, P + bottleneck_.weight, P + bottleneck_.bias, c.pooled[D - 1], c.bottleneck,
                 c.bottleneck_cols);
    leaky_relu_forward(c.bottleneck);

    c.stages.resize(D);
    for (std::size_t k = D; k-- > 0;) {
        const Tensor3<T>& prev = k == D - 1 ? c.bottleneck : c.stages[k + 1].out;
        run_stage(dec_[k], prev, c.enc_out[k], c.stages[k], dropout, derive_seed({pass.seed, 100 + k}));
    }
    std::vector<T> unused;
    conv_forward(head_.shape, P + head_.weight, P + head_.bias, c.stages[0].out, c.output, unused);
    if (config_.sigmoid_output) sigmoid_forward(c.output);

    c.has_variance = config_.variance_branch && pass.want_variance;
    if (c.has_variance) {
        const std::size_t V = var_levels();
        c.var_stages.resize(V);
        for (std::size_t k = V; k-- > 0;) {
            const Tensor3<T>& prev =
                k == D - 1 ? c.bottleneck : (k == V - 1 ? c.stages[k + 1].out : c.var_stages[k + 1].out);
            run_stage(var_dec_[k], prev, c.enc_out[k], c.var_stages[k], dropout, derive_seed({pass.seed, 200 + k}));
        }
        conv_forward(var_head_.shape, P + var_head_.weight, P + var_head_.bias, c.var_stages[0].out, c.log_variance,
                     unused);
    }
}

template <class T>
void UNet<T>::backprop_stage(const Layer& layer, Stage& st, Tensor3<T>& d_out, Tensor3<T>& d_prev,
                             Tensor3<T>& d_skip, std::span<T> grad, Cache& c) const {
    dropout_backward(st.mask, d_out);
    leaky_relu_backward(st.out, d_out);
    conv_backward(layer.shape, params_.data() + layer.weight, st.cat, st.cols, d_out, grad.data() + layer.weight,
                  grad.data() + layer.bias, &c.d_cat, c.d_cols);
    const std::size_t prev_c = st.up.channels;
    c.d_tmp.resize(prev_c, st.up.height, st.up.width);
    std::copy_n(c.d_cat.data.begin(), c.d_tmp.size(), c.d_tmp.data.begin());
    upsample2_backward_add(c.d_tmp, d_prev);
    add_into(d_skip, c.d_cat.data.data() + c.d_tmp.size());
}

template <class T>
void UNet<T>::backward(Cache& c, std::span<const T> d_output, std::span<const T> d_logvar, std::span<T> grad) const {
    if (grad.size() != params_.size()) throw DimensionMismatch("UNet::backward: gradient buffer has wrong size");
    if (d_output.size() != c.output.size()) throw DimensionMismatch("UNet::backward: output gradient has wrong size");
    const std::size_t D = config_.depth;
    const T* P = params_.data();
    T* G = grad.data();
    std::vector<T> unused;

    c.d_enc.resize(D);
    for (std::size_t l = 0; l < D; ++l) zero_like(c.d_enc[l], c.enc_out[l]);
    c.d_stage.resize(D);
    for (std::size_t l = 0; l < D; ++l) zero_like(c.d_stage[l], c.stages[l].out);
    zero_like(c.d_bottleneck, c.bottleneck);

    if (c.has_variance) {
        if (d_logvar.size() != c.log_variance.size())
            throw DimensionMismatch("UNet::backward: log-variance gradient has wrong size");
        const std::size_t V = var_levels();
        c.d_var_stage.resize(V);
        for (std::size_t l = 0; l < V; ++l) zero_like(c.d_var_stage[l], c.var_stages[l].out);
        c.d_head.resize(1, c.log_variance.height, c.log_variance.width);
        std::copy(d_logvar.begin(), d_logvar.end(), c.d_head.data.begin());
        conv_backward(var_head_.shape, P + var_head_.weight, c.var_stages[0].out, unused, c.d_head,
                      G + var_head_.weight, G + var_head_.bias, &c.d_var_stage[0], c.d_cols);
        for (std::size_t k = 0; k < V; ++k) {
            Tensor3<T>& d_prev = k == D - 1 ? c.d_bottleneck : (k == V - 1 ? c.d_stage[k + 1] : c.d_var_stage[k + 1]);
            backprop_stage(var_dec_[k], c.var_stages[k], c.d_var_stage[k], d_prev, c.d_enc[k], grad, c);
        }
    }

    c.d_head.resize(1, c.output.height, c.output.width);
    std::copy(d_output.begin(), d_output.end(), c.d_head.data.begin());
    if (config_.sigmoid_output) sigmoid_backward(c.output, c.d_head);
    conv_backward(head_.shape, P + head_.weight, c.stages[0].out, unused, c.d_head, G + head_.weight, G + head_.bias,
                  &c.d_tmp, c.d_cols);
    add_into(c.d_stage[0], c.d_tmp.data.data());
    for (std::size_t k = 0; k < D; ++k) {
        Tensor3<T>& d_prev = k == D - 1 ? c.d_bottleneck : c.d_stage[k + 1];
        backprop_stage(dec_[k], c.stages[k], c.d_stage[k], d_prev, c.d_enc[k], grad, c);
    }

    leaky_relu_backward(c.bottleneck, c.d_bottleneck);
    conv_backward(bottleneck_.shape, P + bottleneck_.weight, c.pooled[D - 1], c.bottleneck_cols, c.d_bottleneck,
                  G + bottleneck_.weight, G + bottleneck_.bias, &c.d_tmp, c.d_cols);
    avgpool2_backward(c.d_tmp, c.d_cat);
    add_into(c.d_enc[D - 1], c.d_cat.data.data());

    for (std::size_t l = D; l-- > 0;) {
        leaky_relu_backward(c.enc_out[l], c.d_enc[l]);
        const Tensor3<T>& in = l == 0 ? c.input : c.pooled[l - 1];
        conv_backward(enc_[l].shape, P + enc_[l].weight, in, c.enc_cols[l], c.d_enc[l], G + enc_[l].weight,
                      G + enc_[l].bias, l == 0 ? nullptr : &c.d_tmp, c.d_cols);
        if (l > 0) {
            avgpool2_backward(c.d_tmp, c.d_cat);
            add_into(c.d_enc[l - 1], c.d_cat.data.data());
        }
    }
}

template class UNet<float>;
template class UNet<double>;

} // namespace gstuda::nn
