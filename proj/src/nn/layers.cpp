#include "gstuda/nn/layers.hpp"

#include "gstuda/kernels/gemm.hpp"

#include <cmath>
#include <random>

namespace gstuda::nn {

template <class T>
void im2col3x3(const Tensor3<T>& in, std::vector<T>& cols) {
    const std::size_t H = in.height, W = in.width, HW = in.plane();
    cols.assign(in.channels * 9 * HW, T(0));
    for (std::size_t c = 0; c < in.channels; ++c) {
        const T* src = in.channel(c);
        for (std::size_t ky = 0; ky < 3; ++ky) {
            for (std::size_t kx = 0; kx < 3; ++kx) {
                T* dst = cols.data() + ((c * 3 + ky) * 3 + kx) * HW;
                for (std::size_t y = 0; y < H; ++y) {
                    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) continue;
                    const T* row = src + static_cast<std::size_t>(sy) * W;
                    T* out = dst + y * W;
                    const std::size_t x0 = kx == 0 ? 1 : 0;
                    const std::size_t x1 = kx == 2 ? W - 1 : W;
                    for (std::size_t x = x0; x < x1; ++x) out[x] = row[x + kx - 1];
                }
            }
        }
    }
}

template <class T>
void col2im3x3(const std::vector<T>& cols, Tensor3<T>& din) {
    const std::size_t H = din.height, W = din.width, HW = din.plane();
    din.zero();
    for (std::size_t c = 0; c < din.channels; ++c) {
        T* dst = din.channel(c);
        for (std::size_t ky = 0; ky < 3; ++ky) {
            for (std::size_t kx = 0; kx < 3; ++kx) {
                const T* src = cols.data() + ((c * 3 + ky) * 3 + kx) * HW;
                for (std::size_t y = 0; y < H; ++y) {
                    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) continue;
                    T* row = dst + static_cast<std::size_t>(sy) * W;
                    const T* g = src + y * W;
                    const std::size_t x0 = kx == 0 ? 1 : 0;
                    const std::size_t x1 = kx == 2 ? W - 1 : W;
                    for (std::size_t x = x0; x < x1; ++x) row[x + kx - 1] += g[x];
                }
            }
        }
    }
}

template <class T>
void conv_forward(const ConvShape& s, const T* weight, const T* bias, const Tensor3<T>& in, Tensor3<T>& out,
                  std::vector<T>& cols) {
    const std::size_t HW = in.plane();
    out.resize(s.out_channels, in.height, in.width);
    for (std::size_t o = 0; o < s.out_channels; ++o) std::fill_n(out.channel(o), HW, bias[o]);
    const T* B = in.data.data();
    if (s.kernel == 3) {
        im2col3x3(in, cols);
        B = cols.data();
    }
    kernels::gemm_nn<T>(s.out_channels, HW, s.patch(), weight, s.patch(), B, HW, out.data.data(), HW);
}

template <class T>
void conv_backward(const ConvShape& s, const T* weight, const Tensor3<T>& in, const std::vector<T>& cols,
                   const Tensor3<T>& dout, T* dweight, T* dbias, Tensor3<T>* din, std::vector<T>& dcols) {
    const std::size_t HW = dout.plane();
    const std::size_t P = s.patch();
    const T* B = s.kernel == 3 ? cols.data() : in.data.data();

    for (std::size_t o = 0; o < s.out_channels; ++o) {
        const T* g = dout.channel(o);
        T sum = 0;
        for (std::size_t n = 0; n < HW; ++n) sum += g[n];
        dbias[o] += sum;
    }
    kernels::gemm_nt<T>(s.out_channels, P, HW, dout.data.data(), HW, B, HW, dweight, P);

    if (!din) return;
    din->resize(s.in_channels, dout.height, dout.width);
    if (s.kernel == 3) {
        dcols.assign(P * HW, T(0));
        kernels::gemm_tn<T>(P, HW, s.out_channels, weight, P, dout.data.data(), HW, dcols.data(), HW);
        col2im3x3(dcols, *din);
    } else {
        din->zero();
        kernels::gemm_tn<T>(P, HW, s.out_channels, weight, P, dout.data.data(), HW, din->data.data(), HW);
    }
}

template <class T>
void leaky_relu_forward(Tensor3<T>& x) {
    const T slope = static_cast<T>(kLeakySlope);
    for (auto& v : x.data) v = v > T(0) ? v : v * slope;
}

template <class T>
void leaky_relu_backward(const Tensor3<T>& out, Tensor3<T>& grad) {
    const T slope = static_cast<T>(kLeakySlope);
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        if (!(out.data[i] > T(0))) grad.data[i] *= slope;
}

template <class T>
void sigmoid_forward(Tensor3<T>& x) {
    for (auto& v : x.data) v = T(1) / (T(1) + std::exp(-v));
}

template <class T>
void sigmoid_backward(const Tensor3<T>& out, Tensor3<T>& grad) {
    for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] *= out.data[i] * (T(1) - out.data[i]);
}

template <class T>
void dropout_forward(Tensor3<T>& x, double rate, std::uint64_t seed, std::vector<T>& mask) {
    if (rate <= 0.0) {
        mask.clear();
        return;
    }
    std::mt19937_64 rng(seed);
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    // Keep with probability 1 - rate using the top 53 bits of each draw.
    const std::uint64_t threshold = static_cast<std::uint64_t>(rate * 9007199254740992.0);
    mask.resize(x.data.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = (rng() >> 11) >= threshold ? keep_scale : T(0);
        x.data[i] *= mask[i];
    }
}

template <class T>
void dropout_backward(const std::vector<T>& mask, Tensor3<T>& grad) {
    if (mask.empty()) return;
    for (std::size_t i = 0; i < mask.size(); ++i) grad.data[i] *= mask[i];
}

template <class T>
void avgpool2_forward(const Tensor3<T>& in, Tensor3<T>& out) {
    const std::size_t H = in.height / 2, W = in.width / 2;
    out.resize(in.channels, H, W);
    for (std::size_t c = 0; c < in.channels; ++c) {
        const T* src = in.channel(c);
        T* dst = out.channel(c);
        for (std::size_t y = 0; y < H; ++y) {
            const T* r0 = src + (2 * y) * in.width;
            const T* r1 = r0 + in.width;
            for (std::size_t x = 0; x < W; ++x)
                dst[y * W + x] = T(0.25) * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
        }
    }
}

template <class T>
void avgpool2_backward(const Tensor3<T>& dout, Tensor3<T>& din) {
    din.resize(dout.channels, dout.height * 2, dout.width * 2);
    for (std::size_t c = 0; c < dout.channels; ++c) {
        const T* g = dout.channel(c);
        T* dst = din.channel(c);
        for (std::size_t y = 0; y < din.height; ++y)
            for (std::size_t x = 0; x < din.width; ++x) dst[y * din.width + x] = T(0.25) * g[(y / 2) * dout.width + x / 2];
    }
}

template <class T>
void upsample2_forward(const Tensor3<T>& in, Tensor3<T>& out) {
    out.resize(in.channels, in.height * 2, in.width * 2);
    for (std::size_t c = 0; c < in.channels; ++c) {
        const T* src = in.channel(c);
        T* dst = out.channel(c);
        for (std::size_t y = 0; y < out.height; ++y)
            for (std::size_t x = 0; x < out.width; ++x) dst[y * out.width + x] = src[(y / 2) * in.width + x / 2];
    }
}

template <class T>
void upsample2_backward_add(const Tensor3<T>& dout, Tensor3<T>& din) {
    for (std::size_t c = 0; c < din.channels; ++c) {
        const T* g = dout.channel(c);
        T* dst = din.channel(c);
        for (std::size_t y = 0; y < dout.height; ++y)
            for (std::size_t x = 0; x < dout.width; ++x) dst[(y / 2) * din.width + x / 2] += g[y * dout.width + x];
    }
}

template <class T>
void concat_channels(const Tensor3<T>& a, const Tensor3<T>& b, Tensor3<T>& out) {
    out.resize(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
}

#define GSTUDA_INSTANTIATE(T)                                                                                      \
    template void im2col3x3<T>(const Tensor3<T>&, std::vector<T>&);                                               \
    template void col2im3x3<T>(const std::vector<T>&, Tensor3<T>&);                                               \
    template void conv_forward<T>(const ConvShape&, const T*, const T*, const Tensor3<T>&, Tensor3<T>&,           \
                                  std::vector<T>&);                                                               \
    template void conv_backward<T>(const ConvShape&, const T*, const Tensor3<T>&, const std::vector<T>&,          \
                                   const Tensor3<T>&, T*, T*, Tensor3<T>*, std::vector<T>&);                      \
    template void leaky_relu_forward<T>(Tensor3<T>&);                                                             \
    template void leaky_relu_backward<T>(const Tensor3<T>&, Tensor3<T>&);                                         \
    template void sigmoid_forward<T>(Tensor3<T>&);                                                                \
    template void sigmoid_backward<T>(const Tensor3<T>&, Tensor3<T>&);                                            \
    template void dropout_forward<T>(Tensor3<T>&, double, std::uint64_t, std::vector<T>&);                        \
    template void dropout_backward<T>(const std::vector<T>&, Tensor3<T>&);                                        \
    template void avgpool2_forward<T>(const Tensor3<T>&, Tensor3<T>&);                                            \
    template void avgpool2_backward<T>(const Tensor3<T>&, Tensor3<T>&);                                           \
    template void upsample2_forward<T>(const Tensor3<T>&, Tensor3<T>&);                                           \
    template void upsample2_backward_add<T>(const Tensor3<T>&, Tensor3<T>&);                                      \
    template void concat_channels<T>(const Tensor3<T>&, const Tensor3<T>&, Tensor3<T>&);

GSTUDA_INSTANTIATE(float)
GSTUDA_INSTANTIATE(double)

#undef GSTUDA_INSTANTIATE

} // namespace gstuda::nn
