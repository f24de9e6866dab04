#pragma once

#include "gstuda/core/dataset.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace gstuda {

// On-disk layout: <dir>/manifest.txt plus one raw file per sample and role,
// named <subject_id>_<index>.<role>.bin, holding height*width little-endian
// float32 values in row-major order. Values that are not representable as
// float32 are rounded on write.

void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

void write_f32_le(const std::filesystem::path& file, std::span<const double> values);
std::vector<double> read_f32_le(const std::filesystem::path& file, std::size_t expected_count);

/// Rounds every value to the nearest float32 so it survives persistence bit-exactly.
ImageGrid quantize_f32(ImageGrid g);

} // namespace gstuda
