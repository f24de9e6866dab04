#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gstuda {

/// Dense row-major 2-D scalar field with a declared nominal intensity range.
///
/// Every value is finite and range_lo < range_hi; both are checked on
/// construction. Pixel n of an H x W grid is at row n / W, column n % W.
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(std::size_t height, std::size_t width, double range_lo = 0.0, double range_hi = 255.0);
    ImageGrid(std::size_t height, std::size_t width, std::vector<double> values,
              double range_lo = 0.0, double range_hi = 255.0);

    static ImageGrid filled(std::size_t height, std::size_t width, double value,
                            double range_lo = 0.0, double range_hi = 255.0);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    double range_lo() const noexcept { return range_lo_; }
    double range_hi() const noexcept { return range_hi_; }
    double range_span() const noexcept { return range_hi_ - range_lo_; }

    double operator()(std::size_t row, std::size_t col) const noexcept { return values_[row * width_ + col]; }
    double& operator()(std::size_t row, std::size_t col) noexcept { return values_[row * width_ + col]; }
    double operator[](std::size_t n) const noexcept { return values_[n]; }
    double& operator[](std::size_t n) noexcept { return values_[n]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool same_shape(const ImageGrid& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    /// Affine map of values and range onto [lo, hi].
    ImageGrid rescaled(double lo, double hi) const;
    ImageGrid normalized() const { return rescaled(0.0, 1.0); }

    /// Throws if any value is non-finite. Mutating accessors bypass the
    /// constructor check, so code that writes through them calls this.
    void check_finite() const;

    double mean() const noexcept;
    double min() const noexcept;
    double max() const noexcept;

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    double range_lo_ = 0.0;
    double range_hi_ = 255.0;
    std::vector<double> values_;
};

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what);

} // namespace gstuda
