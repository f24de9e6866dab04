#include "gstuda/experiment/plot.hpp"

#include "gstuda/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace gstuda::experiment {

namespace {

struct Glyph {
    char c;
    std::uint8_t rows[7];
};

// 5 bits per row, MSB on the left.
constexpr Glyph kFont[] = {
    {'0', {14, 17, 19, 21, 25, 17, 14}}, {'1', {4, 12, 4, 4, 4, 4, 14}},   {'2', {14, 17, 1, 2, 4, 8, 31}},
    {'3', {31, 2, 4, 2, 1, 17, 14}},     {'4', {2, 6, 10, 18, 31, 2, 2}},  {'5', {31, 16, 30, 1, 1, 17, 14}},
    {'6', {6, 8, 16, 30, 17, 17, 14}},   {'7', {31, 1, 2, 4, 8, 8, 8}},    {'8', {14, 17, 17, 14, 17, 17, 14}},
    {'9', {14, 17, 17, 15, 1, 2, 12}},   {'A', {14, 17, 17, 31, 17, 17, 17}}, {'B', {30, 17, 17, 30, 17, 17, 30}},
    {'C', {14, 17, 16, 16, 16, 17, 14}}, {'D', {28, 18, 17, 17, 17, 18, 28}}, {'E', {31, 16, 16, 30, 16, 16, 31}},
    {'F', {31, 16, 16, 30, 16, 16, 16}}, {'G', {14, 17, 16, 23, 17, 17, 15}}, {'H', {17, 17, 17, 31, 17, 17, 17}},
    {'I', {14, 4, 4, 4, 4, 4, 14}},      {'J', {7, 2, 2, 2, 2, 18, 12}},   {'K', {17, 18, 20, 24, 20, 18, 17}},
    {'L', {16, 16, 16, 16, 16, 16, 31}}, {'M', {17, 27, 21, 21, 17, 17, 17}}, {'N', {17, 17, 25, 21, 19, 17, 17}},
    {'O', {14, 17, 17, 17, 17, 17, 14}}, {'P', {30, 17, 17, 30, 16, 16, 16}}, {'Q', {14, 17, 17, 17, 21, 18, 13}},
    {'R', {30, 17, 17, 30, 20, 18, 17}}, {'S', {15, 16, 16, 14, 1, 1, 30}}, {'T', {31, 4, 4, 4, 4, 4, 4}},
    {'U', {17, 17, 17, 17, 17, 17, 14}}, {'V', {17, 17, 17, 17, 17, 10, 4}}, {'W', {17, 17, 17, 21, 21, 21, 10}},
    {'X', {17, 17, 10, 4, 10, 17, 17}},  {'Y', {17, 17, 10, 4, 4, 4, 4}},  {'Z', {31, 1, 2, 4, 8, 16, 31}},
    {'.', {0, 0, 0, 0, 0, 12, 12}},      {',', {0, 0, 0, 0, 12, 4, 8}},    {'-', {0, 0, 0, 31, 0, 0, 0}},
    {'+', {0, 4, 4, 31, 4, 4, 0}},       {'=', {0, 0, 31, 0, 31, 0, 0}},   {':', {0, 12, 12, 0, 12, 12, 0}},
    {'(', {2, 4, 8, 8, 8, 4, 2}},        {')', {8, 4, 2, 2, 2, 4, 8}},     {'/', {0, 1, 2, 4, 8, 16, 0}},
    {'_', {0, 0, 0, 0, 0, 0, 31}},       {'<', {2, 4, 8, 16, 8, 4, 2}},    {'>', {8, 4, 2, 1, 2, 4, 8}},
    {'%', {24, 25, 2, 4, 8, 19, 3}},
};

const Glyph* find_glyph(char c) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    for (const auto& g : kFont)
        if (g.c == c) return &g;
    return nullptr;
}

constexpr Rgb kPalette[] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},  {148, 103, 189},
                            {255, 127, 14}, {140, 86, 75},  {227, 119, 194}, {127, 127, 127}};

std::uint8_t grey(double v, double lo, double hi) {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    return static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
}

} // namespace

Canvas::Canvas(std::size_t width, std::size_t height, Rgb background)
    : width_(width), height_(height), rgb_(width * height * 3) {
    for (std::size_t i = 0; i < width * height; ++i) std::copy(background.begin(), background.end(), rgb_.begin() + 3 * i);
}

void Canvas::set(long x, long y, Rgb c) {
    if (x < 0 || y < 0 || x >= static_cast<long>(width_) || y >= static_cast<long>(height_)) return;
    std::copy(c.begin(), c.end(), rgb_.begin() + 3 * (static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)));
}

void Canvas::line(double x0, double y0, double x1, double y1, Rgb c) {
    const double steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1.0});
    for (int i = 0; i <= static_cast<int>(steps); ++i) {
        const double t = i / steps;
        set(std::lround(x0 + t * (x1 - x0)), std::lround(y0 + t * (y1 - y0)), c);
    }
}

void Canvas::rect(long x0, long y0, long x1, long y1, Rgb c) {
    for (long y = y0; y <= y1; ++y)
        for (long x = x0; x <= x1; ++x) set(x, y, c);
}

void Canvas::text(long x, long y, const std::string& s, Rgb c, int scale) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Glyph* g = find_glyph(s[i]);
        if (!g) continue;
        const long ox = x + static_cast<long>(i) * 6 * scale;
        for (int r = 0; r < 7; ++r)
            for (int b = 0; b < 5; ++b)
                if (g->rows[r] & (1 << (4 - b))) rect(ox + b * scale, y + r * scale, ox + (b + 1) * scale - 1, y + (r + 1) * scale - 1, c);
    }
}

void Canvas::image(long x, long y, const ImageGrid& g, double lo, double hi, int zoom) {
    for (std::size_t r = 0; r < g.height(); ++r)
        for (std::size_t col = 0; col < g.width(); ++col) {
            const std::uint8_t v = grey(g(r, col), lo, hi);
            rect(x + static_cast<long>(col) * zoom, y + static_cast<long>(r) * zoom, x + static_cast<long>(col + 1) * zoom - 1,
                 y + static_cast<long>(r + 1) * zoom - 1, {v, v, v});
        }
}

void Canvas::write_ppm(const std::filesystem::path& file) const {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw IoError("cannot write " + file.string());
    os << "P6\n" << width_ << ' ' << height_ << "\n255\n";
    os.write(reinterpret_cast<const char*>(rgb_.data()), static_cast<std::streamsize>(rgb_.size()));
}

void write_pgm(const std::filesystem::path& file, const ImageGrid& g, double lo, double hi) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw IoError("cannot write " + file.string());
    os << "P5\n" << g.width() << ' ' << g.height() << "\n255\n";
    for (double v : g.values()) os.put(static_cast<char>(grey(v, lo, hi)));
}

void line_chart(const std::filesystem::path& file, const ChartSpec& spec, const std::vector<Series>& series) {
    constexpr long W = 640, H = 420, L = 80, R = 170, T = 40, B = 60;
    const long top = T + static_cast<long>(spec.notes.size()) * 10;
    Canvas cv(W, H + static_cast<std::size_t>(top - T));
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double e = i < s.err.size() ? s.err[i] : 0.0;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i] - e);
            ymax = std::max(ymax, s.y[i] + e);
        }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const long x0 = L, x1 = W - R, y0 = top, y1 = top + (H - T - B);
    auto px = [&](double x) { return x0 + (x - xmin) / (xmax - xmin) * static_cast<double>(x1 - x0); };
    auto py = [&](double y) { return y1 - (y - ymin) / (ymax - ymin) * static_cast<double>(y1 - y0); };

    const Rgb black{0, 0, 0}, light{220, 220, 220};
    cv.text(L, 10, spec.title, black, 2);
    for (std::size_t i = 0; i < spec.notes.size(); ++i) cv.text(L, 30 + static_cast<long>(i) * 10, spec.notes[i], black);
    for (int k = 0; k <= 4; ++k) {
        const double yv = ymin + (ymax - ymin) * k / 4.0, xv = xmin + (xmax - xmin) * k / 4.0;
        cv.line(x0, py(yv), x1, py(yv), light);
        cv.text(4, std::lround(py(yv)) - 3, fmt::format("{:.4g}", yv), black);
        cv.text(std::lround(px(xv)) - 12, y1 + 8, fmt::format("{:.4g}", xv), black);
    }
    cv.line(x0, y0, x0, y1, black);
    cv.line(x0, y1, x1, y1, black);
    cv.text((x0 + x1) / 2 - static_cast<long>(spec.x_label.size()) * 3, y1 + 24, spec.x_label, black);
    cv.text(4, y0 - 12, spec.y_label, black);

    for (std::size_t s = 0; s < series.size(); ++s) {
        const Rgb c = kPalette[s % std::size(kPalette)];
        const auto& sr = series[s];
        for (std::size_t i = 0; i < sr.x.size(); ++i) {
            const double X = px(sr.x[i]), Y = py(sr.y[i]);
            if (i + 1 < sr.x.size()) cv.line(X, Y, px(sr.x[i + 1]), py(sr.y[i + 1]), c);
            cv.rect(std::lround(X) - 2, std::lround(Y) - 2, std::lround(X) + 2, std::lround(Y) + 2, c);
            if (i < sr.err.size() && sr.err[i] > 0.0) {
                cv.line(X, py(sr.y[i] - sr.err[i]), X, py(sr.y[i] + sr.err[i]), c);
                cv.line(X - 3, py(sr.y[i] - sr.err[i]), X + 3, py(sr.y[i] - sr.err[i]), c);
                cv.line(X - 3, py(sr.y[i] + sr.err[i]), X + 3, py(sr.y[i] + sr.err[i]), c);
            }
        }
        cv.rect(x1 + 10, y0 + 6 + static_cast<long>(s) * 14, x1 + 20, y0 + 12 + static_cast<long>(s) * 14, c);
        cv.text(x1 + 26, y0 + 5 + static_cast<long>(s) * 14, sr.name, black);
    }
    cv.write_ppm(file);
}

void tile_grid(const std::filesystem::path& file, const std::vector<std::vector<Tile>>& rows, int zoom) {
    std::size_t cols = 0, th = 0, tw = 0;
    for (const auto& r : rows) {
        cols = std::max(cols, r.size());
        for (const auto& t : r) {
            th = std::max(th, t.image.height());
            tw = std::max(tw, t.image.width());
        }
    }
    if (cols == 0) throw InvalidArgument("tile_grid: nothing to draw");
    const long cell_w = static_cast<long>(tw) * zoom + 8, cell_h = static_cast<long>(th) * zoom + 20;
    Canvas cv(static_cast<std::size_t>(cell_w) * cols + 8, static_cast<std::size_t>(cell_h) * rows.size() + 8);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const auto& t = rows[r][c];
            const long x = 8 + static_cast<long>(c) * cell_w, y = 4 + static_cast<long>(r) * cell_h;
            cv.text(x, y, t.label, {0, 0, 0});
            cv.image(x, y + 12, t.image, t.lo, t.hi, zoom);
        }
    cv.write_ppm(file);
}

} // namespace gstuda::experiment
