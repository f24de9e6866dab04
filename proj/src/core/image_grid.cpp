#include "gstuda/core/image_grid.hpp"

#include "gstuda/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gstuda {

namespace {

void check_header(std::size_t height, std::size_t width, double lo, double hi) {
    if (height == 0 || width == 0) throw InvalidArgument("ImageGrid: height and width must be positive");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw InvalidArgument("ImageGrid: range_lo must be < range_hi");
}

} // namespace

ImageGrid::ImageGrid(std::size_t height, std::size_t width, double range_lo, double range_hi)
    : height_(height), width_(width), range_lo_(range_lo), range_hi_(range_hi), values_(height * width, 0.0) {
    check_header(height, width, range_lo, range_hi);
}

ImageGrid::ImageGrid(std::size_t height, std::size_t width, std::vector<double> values, double range_lo,
                     double range_hi)
    : height_(height), width_(width), range_lo_(range_lo), range_hi_(range_hi), values_(std::move(values)) {
    check_header(height, width, range_lo, range_hi);
    if (values_.size() != height * width)
        throw DimensionMismatch("ImageGrid: expected " + std::to_string(height * width) + " values, got " +
                                std::to_string(values_.size()));
    check_finite();
}

ImageGrid ImageGrid::filled(std::size_t height, std::size_t width, double value, double range_lo, double range_hi) {
    return ImageGrid(height, width, std::vector<double>(height * width, value), range_lo, range_hi);
}

ImageGrid ImageGrid::rescaled(double lo, double hi) const {
    const double scale = (hi - lo) / range_span();
    std::vector<double> out(values_.size());
    std::transform(values_.begin(), values_.end(), out.begin(),
                   [&](double v) { return lo + (v - range_lo_) * scale; });
    return ImageGrid(height_, width_, std::move(out), lo, hi);
}

void ImageGrid::check_finite() const {
    for (std::size_t n = 0; n < values_.size(); ++n) {
        if (!std::isfinite(values_[n]))
            throw InvalidArgument("ImageGrid: non-finite value at pixel " + std::to_string(n));
    }
}

double ImageGrid::mean() const noexcept {
    if (values_.empty()) return 0.0;
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

double ImageGrid::min() const noexcept { return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()); }
double ImageGrid::max() const noexcept { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
    if (!a.same_shape(b))
        throw DimensionMismatch(std::string(what) + ": shape " + std::to_string(a.height()) + "x" +
                                std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                                std::to_string(b.width()));
}

} // namespace gstuda
