#pragma once

// Direct-formula references for the metric tests.

#include "gstuda/core/image_grid.hpp"

#include <cmath>
#include <vector>

namespace test {

/// Windowed SSIM evaluated window by window with a 2-D Gaussian kernel and
/// centred second moments. Same conventions as the library: 11x11 window,
/// sigma 1.5, valid windows only, images mapped to [0,1] by the truth range.
inline double ssim_reference(const gstuda::ImageGrid& a, const gstuda::ImageGrid& b) {
    const int k = 11;
    const double sigma = 1.5;
    std::vector<double> g(k * k);
    double gsum = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double di = i - 5.0, dj = j - 5.0;
            g[i * k + j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
            gsum += g[i * k + j];
        }
    for (auto& v : g) v /= gsum;
    const double lo = b.range_lo(), span = b.range_span();
    const double C1 = 1e-4, C2 = 9e-4;
    const int H = static_cast<int>(b.height()), W = static_cast<int>(b.width());
    double total = 0.0;
    int count = 0;
    for (int r = 0; r + k <= H; ++r)
        for (int c = 0; c + k <= W; ++c) {
            double mx = 0, my = 0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    mx += g[i * k + j] * (a(r + i, c + j) - lo) / span;
                    my += g[i * k + j] * (b(r + i, c + j) - lo) / span;
                }
            double vx = 0, vy = 0, cxy = 0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    const double dx = (a(r + i, c + j) - lo) / span - mx;
                    const double dy = (b(r + i, c + j) - lo) / span - my;
                    vx += g[i * k + j] * dx * dx;
                    vy += g[i * k + j] * dy * dy;
                    cxy += g[i * k + j] * dx * dy;
                }
            total += (2 * mx * my + C1) * (2 * cxy + C2) / ((mx * mx + my * my + C1) * (vx + vy + C2));
            ++count;
        }
    return total / count;
}

/// t = mean(d) / (sd(d) / sqrt(n)) written out for three pairs.
inline double hand_t3(const double a[3], const double b[3]) {
    const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
    const double mean = (d0 + d1 + d2) / 3.0;
    const double var = ((d0 - mean) * (d0 - mean) + (d1 - mean) * (d1 - mean) + (d2 - mean) * (d2 - mean)) / 2.0;
    return mean / (std::sqrt(var) / std::sqrt(3.0));
}

} // namespace test
