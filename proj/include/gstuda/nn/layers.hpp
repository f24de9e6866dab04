#pragma once

// Single-sample building blocks with hand-written backward passes. Backward
// routines accumulate parameter gradients (+=) and overwrite input gradients.

#include "gstuda/nn/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gstuda::nn {

inline constexpr double kLeakySlope = 0.2;

/// Square "same" convolution, stride 1, zero padding kernel/2. kernel is 1 or 3.
struct ConvShape {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 3;

    std::size_t weight_count() const noexcept { return out_channels * in_channels * kernel * kernel; }
    std::size_t patch() const noexcept { return in_channels * kernel * kernel; }
};

template <class T>
void im2col3x3(const Tensor3<T>& in, std::vector<T>& cols);
template <class T>
void col2im3x3(const std::vector<T>& cols, Tensor3<T>& din);

/// out = W * im2col(in) + b. cols receives the unfolded input (3x3 only) and
/// must be kept for the backward pass.
template <class T>
void conv_forward(const ConvShape& s, const T* weight, const T* bias, const Tensor3<T>& in, Tensor3<T>& out,
                  std::vector<T>& cols);

/// din may be null when the input gradient is not needed.
template <class T>
void conv_backward(const ConvShape& s, const T* weight, const Tensor3<T>& in, const std::vector<T>& cols,
                   const Tensor3<T>& dout, T* dweight, T* dbias, Tensor3<T>* din, std::vector<T>& dcols);

template <class T>
void leaky_relu_forward(Tensor3<T>& x);
/// Uses the activation output: the sign is preserved by the activation.
template <class T>
void leaky_relu_backward(const Tensor3<T>& out, Tensor3<T>& grad);

template <class T>
void sigmoid_forward(Tensor3<T>& x);
template <class T>
void sigmoid_backward(const Tensor3<T>& out, Tensor3<T>& grad);

/// Inverted dropout: mask entries are 0 or 1/(1-rate). An empty mask means
/// the layer ran deterministically (identity).
template <class T>
void dropout_forward(Tensor3<T>& x, double rate, std::uint64_t seed, std::vector<T>& mask);
template <class T>
void dropout_backward(const std::vector<T>& mask, Tensor3<T>& grad);

template <class T>
void avgpool2_forward(const Tensor3<T>& in, Tensor3<T>& out);
template <class T>
void avgpool2_backward(const Tensor3<T>& dout, Tensor3<T>& din);

template <class T>
void upsample2_forward(const Tensor3<T>& in, Tensor3<T>& out);
/// Accumulates into din.
template <class T>
void upsample2_backward_add(const Tensor3<T>& dout, Tensor3<T>& din);

template <class T>
void concat_channels(const Tensor3<T>& a, const Tensor3<T>& b, Tensor3<T>& out);

} // namespace gstuda::nn
