#pragma once

// Ground-truth access for evaluation, persistence and the supervised
// upper-bound baseline. Adaptation code must not include this header.

#include "gstuda/core/dataset.hpp"

namespace gstuda {

struct OracleAccess {
    static const ImageGrid& hidden_target(const UnpairedSample& s);
    static const std::optional<ImageGrid>& maybe_hidden_target(const UnpairedSample& s) {
        return s.hidden_target_;
    }
};

} // namespace gstuda
