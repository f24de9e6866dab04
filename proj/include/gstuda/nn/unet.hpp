#pragma once

#include "gstuda/nn/layers.hpp"
#include "gstuda/nn/param_set.hpp"
#include "gstuda/nn/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gstuda::nn {

struct UNetConfig {
    std::size_t depth = 3;
    std::size_t base_channels = 8;
    double dropout_rate = 0.0;     // decoder stages only
    bool variance_branch = false;  // second head predicting log-variance
    bool sigmoid_output = false;   // squash the main head into (0, 1)

    void validate() const;
    std::string describe() const;
};

/// Encoder-decoder with skip connections on single-channel images.
///
/// Encoder level l: conv3x3 -> leaky ReLU at H/2^l with base*2^l channels,
/// followed by 2x2 average pooling. A bottleneck conv runs at H/2^depth.
/// Decoder stage l: nearest upsample, concatenate encoder level l, conv3x3,
/// leaky ReLU, dropout. A 1x1 conv produces the output map.
///
/// With variance_branch the last min(2, depth) decoder stages and the 1x1
/// head are duplicated into a log-variance branch, so the two heads share
/// the encoder and the early decoder (three duplicated layers at depth >= 2).
template <class T>
class UNet {
public:
    struct Stage {
        Tensor3<T> up, cat, out;
        std::vector<T> cols, mask;
    };

    /// Activations retained between forward and backward for one sample.
    struct Cache {
        Tensor3<T> input;
        std::vector<Tensor3<T>> enc_out, pooled;
        std::vector<std::vector<T>> enc_cols;
        Tensor3<T> bottleneck;
        std::vector<T> bottleneck_cols;
        std::vector<Stage> stages, var_stages;
        Tensor3<T> output, log_variance;
        bool has_variance = false;

        // backward scratch
        std::vector<Tensor3<T>> d_enc, d_stage, d_var_stage;
        Tensor3<T> d_bottleneck, d_tmp, d_cat, d_head;
        std::vector<T> d_cols;
    };

    struct Pass {
        bool stochastic = false;
        std::uint64_t seed = 0;
        bool want_variance = true;
    };

    UNet(const UNetConfig& config, std::uint64_t init_seed);

    const UNetConfig& config() const noexcept { return config_; }
    ParamSet<T>& params() noexcept { return params_; }
    const ParamSet<T>& params() const noexcept { return params_; }

    /// Throws InvalidArgument unless both dimensions are positive multiples of 2^depth.
    void check_input(std::size_t height, std::size_t width) const;

    void forward(std::span<const T> image, std::size_t height, std::size_t width, const Pass& pass,
                 Cache& cache) const;

    /// Accumulates d(loss)/d(params) into grad given the loss gradient with
    /// respect to the outputs of the last forward stored in cache. d_logvar
    /// is ignored when the forward did not compute the variance head.
    void backward(Cache& cache, std::span<const T> d_output, std::span<const T> d_logvar, std::span<T> grad) const;

private:
    struct Layer {
        ConvShape shape;
        std::size_t weight = 0;
        std::size_t bias = 0;
    };

    Layer add_layer(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel);
    std::size_t level_channels(std::size_t level) const noexcept { return config_.base_channels << level; }
    std::size_t stage_out_channels(std::size_t level) const noexcept {
        return level == 0 ? config_.base_channels : level_channels(level - 1);
    }
    std::size_t var_levels() const noexcept;

    void run_stage(const Layer& layer, const Tensor3<T>& prev, const Tensor3<T>& skip, Stage& st, bool dropout,
                   std::uint64_t seed) const;
    void backprop_stage(const Layer& layer, Stage& st, Tensor3<T>& d_out, Tensor3<T>& d_prev, Tensor3<T>& d_skip,
                        std::span<T> grad, Cache& c) const;

    UNetConfig config_;
    ParamSet<T> params_;
    std::vector<Layer> enc_;
    Layer bottleneck_;
    std::vector<Layer> dec_;
    Layer head_;
    std::vector<Layer> var_dec_;
    Layer var_head_;
};

} // namespace gstuda::nn
