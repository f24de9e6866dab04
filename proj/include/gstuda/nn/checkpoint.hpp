#pragma once

// Checkpoint file: a text header
//
//   gstuda-checkpoint 1
//   kind <translator|attention>
//   arch <UNetConfig::describe()>
//   tensor <name> <dim0> <dim1> ...
//   payload <float count>
//
// followed by the parameters as concatenated little-endian float32 in
// header order. Loading verifies every tensor name and shape.

#include "gstuda/nn/translator.hpp"

#include <filesystem>

namespace gstuda {

void save_checkpoint(const std::filesystem::path& file, const TranslatorModel& model);
void save_checkpoint(const std::filesystem::path& file, const AttentionModel& model);

TranslatorModel load_translator(const std::filesystem::path& file);
AttentionModel load_attention(const std::filesystem::path& file);

} // namespace gstuda
