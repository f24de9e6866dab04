#include "gstuda/synth/synth.hpp"

#include "gstuda/core/dataset_io.hpp"
#include "gstuda/core/errors.hpp"
#include "gstuda/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace gstuda::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Foreground is confined to an ellipse of this relative semi-axis, which
// leaves ~36% of the grid as background.
constexpr double kFieldOfView = 0.45;
constexpr double kEdgeSoftness = 0.08;
constexpr double kForegroundThreshold = 0.02;

struct Blob {
    double cy, cx;        // centre, fraction of size
    double ry, rx;        // semi-axes, fraction of size
    double angle;
    double intensity;     // fraction of range
    double texture_freq;  // cycles per image
    double texture_angle;
    double motion_y, motion_x, motion_r;
};

double smooth_step_inside(double radial) {
    // 1 inside, 0 outside, logistic transition around radial == 1
    return 1.0 / (1.0 + std::exp((radial - 1.0) / kEdgeSoftness));
}

} // namespace

void ShiftConfig::validate() const {
    if (!(tag_period >= 2.0)) throw InvalidArgument("ShiftConfig: tag_period must be >= 2");
    if (!(tag_contrast >= 0.0 && tag_contrast <= 1.0)) throw InvalidArgument("ShiftConfig: tag_contrast must be in [0,1]");
    if (!(gamma > 0.0)) throw InvalidArgument("ShiftConfig: gamma must be positive");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("ShiftConfig: noise_sigma must be >= 0");
    if (!std::isfinite(brightness_offset) || !std::isfinite(background_level))
        throw InvalidArgument("ShiftConfig: offsets must be finite");
}

bool ShiftConfig::same_appearance(const ShiftConfig& o) const noexcept {
    return tag_period == o.tag_period && tag_contrast == o.tag_contrast && gamma == o.gamma &&
           brightness_offset == o.brightness_offset && noise_sigma == o.noise_sigma &&
           background_level == o.background_level;
}

std::string ShiftConfig::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "tag_period=" << tag_period << ";tag_contrast=" << tag_contrast << ";gamma=" << gamma
       << ";brightness_offset=" << brightness_offset << ";noise_sigma=" << noise_sigma
       << ";background_level=" << background_level << ";seed=" << seed;
    return os.str();
}

void PhantomSpec::validate() const {
    if (height == 0 || width == 0) throw InvalidArgument("PhantomSpec: height and width must be positive");
    if (n_blobs < 1) throw InvalidArgument("PhantomSpec: n_blobs must be >= 1");
    if (!(blob_scale >= 0.0)) throw InvalidArgument("PhantomSpec: blob_scale must be >= 0");
}

ImageGrid make_phantom(const PhantomSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(derive_seed({spec.seed, 0x70686e74}));
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    std::vector<Blob> blobs(spec.n_blobs);
    for (auto& b : blobs) {
        b.cy = 0.5 + 0.18 * (2.0 * u01(rng) - 1.0);
        b.cx = 0.5 + 0.18 * (2.0 * u01(rng) - 1.0);
        b.ry = spec.blob_scale * (0.10 + 0.14 * u01(rng));
        b.rx = spec.blob_scale * (0.10 + 0.14 * u01(rng));
        b.angle = std::numbers::pi * u01(rng);
        b.intensity = 0.45 + 0.45 * u01(rng);
        b.texture_freq = 2.0 + 4.0 * u01(rng);
        b.texture_angle = std::numbers::pi * u01(rng);
        b.motion_y = 0.03 * (2.0 * u01(rng) - 1.0);
        b.motion_x = 0.03 * (2.0 * u01(rng) - 1.0);
        b.motion_r = 0.15 * (2.0 * u01(rng) - 1.0);
    }

    const double h = static_cast<double>(spec.height);
    const double w = static_cast<double>(spec.width);
    ImageGrid out(spec.height, spec.width, 0.0, 255.0);
    for (std::size_t r = 0; r < spec.height; ++r) {
        for (std::size_t c = 0; c < spec.width; ++c) {
            const double y = (static_cast<double>(r) + 0.5) / h;
            const double x = (static_cast<double>(c) + 0.5) / w;
            double value = 0.0;
            for (const auto& b : blobs) {
                if (b.ry <= 0.0 || b.rx <= 0.0) continue;
                const double s = std::sin(kTwoPi * spec.phase);
                const double dy = y - (b.cy + b.motion_y * s);
                const double dx = x - (b.cx + b.motion_x * s);
                const double ca = std::cos(b.angle), sa = std::sin(b.angle);
                const double scale = 1.0 + b.motion_r * s;
                const double u = (ca * dx + sa * dy) / (b.rx * scale);
                const double v = (-sa * dx + ca * dy) / (b.ry * scale);
                const double inside = smooth_step_inside(std::sqrt(u * u + v * v));
                const double texture =
                    1.0 + 0.15 * std::sin(kTwoPi * b.texture_freq *
                                          (x * std::cos(b.texture_angle) + y * std::sin(b.texture_angle)));
                value = std::max(value, b.intensity * texture * inside);
            }
            const double fy = (y - 0.5) / kFieldOfView;
            const double fx = (x - 0.5) / kFieldOfView;
            const double fov = fy * fy + fx * fx <= 1.0 ? 1.0 : 0.0;
            out(r, c) = std::clamp(255.0 * value * fov, 0.0, 255.0);
        }
    }
    return quantize_f32(std::move(out));
}

double tag_factor(const ShiftConfig& shift, double row) noexcept {
    return 1.0 - shift.tag_contrast * 0.5 * (1.0 + std::cos(kTwoPi * row / shift.tag_period));
}

PairedSample render_pair(const ImageGrid& phantom, const ShiftConfig& shift, std::string subject_id) {
    shift.validate();
    const double lo = phantom.range_lo();
    const double span = phantom.range_span();
    std::mt19937_64 rng(derive_seed({shift.seed, 0x6e6f6973}));
    std::normal_distribution<double> noise(0.0, 1.0);

    ImageGrid input(phantom.height(), phantom.width(), lo, phantom.range_hi());
    for (std::size_t r = 0; r < phantom.height(); ++r) {
        const double tag = tag_factor(shift, static_cast<double>(r));
        for (std::size_t c = 0; c < phantom.width(); ++c) {
            const double unit = std::clamp((phantom(r, c) - lo) / span, 0.0, 1.0);
            const double adjusted = shift.gamma == 1.0 ? unit : std::pow(unit, shift.gamma);
            const double background = 1.0 - std::min(1.0, unit / kForegroundThreshold);
            double v = lo + span * adjusted * tag + shift.brightness_offset + shift.background_level * background;
            if (shift.noise_sigma > 0.0) v += shift.noise_sigma * noise(rng);
            input(r, c) = std::clamp(v, lo, phantom.range_hi());
        }
    }
    return PairedSample(quantize_f32(std::move(input)), phantom, std::move(subject_id));
}

ImageGrid foreground_mask(const ImageGrid& phantom) {
    ImageGrid m(phantom.height(), phantom.width(), 0.0, 1.0);
    const double cut = phantom.range_lo() + kForegroundThreshold * phantom.range_span();
    for (std::size_t n = 0; n < phantom.size(); ++n) m[n] = phantom[n] > cut ? 1.0 : 0.0;
    return m;
}

Task build_task(const TaskSpec& spec) {
    if (spec.n_source_subjects < 1 || spec.n_target_subjects < 1 || spec.source_slices_per_subject < 1 ||
        spec.target_slices_per_subject < 1)
        throw InvalidArgument("build_task: subject and slice counts must be >= 1");
    spec.phantom.validate();
    spec.source_shift.validate();
    spec.target_shift.validate();

    auto make_slices = [&](std::size_t subjects, std::size_t slices, const ShiftConfig& shift, std::uint64_t domain,
                           const char* prefix, auto&& emit) {
        for (std::size_t s = 0; s < subjects; ++s) {
            const std::string subject = std::string(prefix) + std::to_string(s);
            for (std::size_t k = 0; k < slices; ++k) {
                PhantomSpec ps = spec.phantom;
                ps.seed = derive_seed({spec.phantom.seed, domain, s});
                ps.phase = static_cast<double>(k) / static_cast<double>(slices);
                ShiftConfig sc = shift;
                sc.seed = derive_seed({shift.seed, domain, s, k});
                emit(render_pair(make_phantom(ps), sc, subject));
            }
        }
    };

    std::vector<PairedSample> source;
    make_slices(spec.n_source_subjects, spec.source_slices_per_subject, spec.source_shift, 1, "src",
                [&](PairedSample p) { source.push_back(std::move(p)); });
    std::vector<UnpairedSample> target;
    make_slices(spec.n_target_subjects, spec.target_slices_per_subject, spec.target_shift, 2, "tgt",
                [&](PairedSample p) { target.emplace_back(std::move(p.input), p.subject_id, std::move(p.target)); });

    Task task{Dataset(std::move(source), derive_seed({spec.phantom.seed, 11})),
              Dataset(std::move(target), derive_seed({spec.phantom.seed, 12})), {}};
    if (spec.source_shift.same_appearance(spec.target_shift))
        task.warnings.emplace_back("zero_domain_gap: source and target shift configs are identical");
    for (Dataset* ds : {&task.source, &task.target}) {
        ds->notes.emplace_back("source_shift", spec.source_shift.describe());
        ds->notes.emplace_back("target_shift", spec.target_shift.describe());
        for (const auto& w : task.warnings) ds->notes.emplace_back("warning", w);
    }
    return task;
}

} // namespace gstuda::synth
