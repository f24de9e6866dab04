#pragma once

// Dependency-free raster output: PGM image tiles and PPM line charts with a
// built-in 5x7 bitmap font. Output bytes are a pure function of the inputs.

#include "gstuda/core/image_grid.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gstuda::experiment {

using Rgb = std::array<std::uint8_t, 3>;

class Canvas {
public:
    Canvas(std::size_t width, std::size_t height, Rgb background = {255, 255, 255});

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }

    void set(long x, long y, Rgb c);
    void line(double x0, double y0, double x1, double y1, Rgb c);
    void rect(long x0, long y0, long x1, long y1, Rgb c);
    /// Upper-case 5x7 glyphs; unknown characters render as blanks.
    void text(long x, long y, const std::string& s, Rgb c, int scale = 1);
    /// Grey image mapped from [lo, hi] to [0, 255], nearest-neighbour zoom.
    void image(long x, long y, const ImageGrid& g, double lo, double hi, int zoom = 1);

    void write_ppm(const std::filesystem::path& file) const;

private:
    std::size_t width_, height_;
    std::vector<std::uint8_t> rgb_;
};

void write_pgm(const std::filesystem::path& file, const ImageGrid& g, double lo, double hi);

struct Series {
    std::string name;
    std::vector<double> x, y;
    std::vector<double> err; // optional symmetric error bars
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> notes; // extra lines printed under the title
};

void line_chart(const std::filesystem::path& file, const ChartSpec& spec, const std::vector<Series>& series);

/// Rows of labelled image tiles, each tile scaled with its own [lo, hi].
struct Tile {
    std::string label;
    ImageGrid image;
    double lo = 0.0, hi = 1.0;
};

void tile_grid(const std::filesystem::path& file, const std::vector<std::vector<Tile>>& rows, int zoom = 2);

} // namespace gstuda::experiment
