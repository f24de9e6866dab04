#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace gstuda::nn {

/// Channel-major (C, H, W) activation buffer for one sample.
template <class T>
struct Tensor3 {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> data;

    void resize(std::size_t c, std::size_t h, std::size_t w) {
        channels = c;
        height = h;
        width = w;
        data.resize(c * h * w);
    }
    void zero() { std::fill(data.begin(), data.end(), T(0)); }

    std::size_t plane() const noexcept { return height * width; }
    std::size_t size() const noexcept { return data.size(); }
    T* channel(std::size_t c) noexcept { return data.data() + c * plane(); }
    const T* channel(std::size_t c) const noexcept { return data.data() + c * plane(); }
};

} // namespace gstuda::nn
