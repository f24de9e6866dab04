#pragma once

// Procedural two-domain translation tasks: smooth blob phantoms on a dark
// background, rendered into a "tagged" input (multiplicative horizontal
// sinusoid, intensity transfer, noise) paired with the clean phantom.

#include "gstuda/core/dataset.hpp"
#include "gstuda/core/image_grid.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gstuda::synth {

struct ShiftConfig {
    double tag_period = 6.0;      // pixels between tag valleys, >= 2
    double tag_contrast = 0.6;    // 0 = no tags, 1 = valleys reach zero
    double gamma = 1.0;           // applied to the unit-normalized phantom
    double brightness_offset = 0.0;
    double noise_sigma = 0.0;     // Gaussian, intensity units
    double background_level = 0.0; // added where the phantom is background
    std::uint64_t seed = 0;

    void validate() const;
    /// Equality of the appearance parameters, ignoring the noise seed.
    bool same_appearance(const ShiftConfig& other) const noexcept;
    std::string describe() const;
};

struct PhantomSpec {
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t n_blobs = 4;
    double blob_scale = 0.8; // fraction of the maximal blob radius
    std::uint64_t seed = 0;
    /// Slice position within a subject; moves the blobs smoothly so that
    /// neighbouring slices of one subject look alike.
    double phase = 0.0;

    void validate() const;
};

ImageGrid make_phantom(const PhantomSpec& spec);

/// Multiplicative tag pattern value for a given row.
double tag_factor(const ShiftConfig& shift, double row) noexcept;

PairedSample render_pair(const ImageGrid& phantom, const ShiftConfig& shift, std::string subject_id = "s0");

struct TaskSpec {
    PhantomSpec phantom;
    std::size_t n_source_subjects = 10;
    std::size_t n_target_subjects = 1;
    std::size_t source_slices_per_subject = 20;
    std::size_t target_slices_per_subject = 50;
    ShiftConfig source_shift;
    ShiftConfig target_shift;
};

struct Task {
    Dataset source;
    Dataset target;
    std::vector<std::string> warnings;
};

Task build_task(const TaskSpec& spec);

/// Fraction of phantom pixels treated as foreground (above 2% of the range).
ImageGrid foreground_mask(const ImageGrid& phantom);

} // namespace gstuda::synth
