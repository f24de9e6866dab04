#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gstuda {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A loss term evaluated to NaN/Inf. Carries the term name and, when known,
/// the flat (row-major) pixel index of the first offending value.
class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(std::string term, std::ptrdiff_t pixel = -1)
        : Error(make_message(term, pixel)), term_(std::move(term)), pixel_(pixel) {}

    const std::string& term() const noexcept { return term_; }
    std::ptrdiff_t pixel() const noexcept { return pixel_; }

private:
    static std::string make_message(const std::string& term, std::ptrdiff_t pixel) {
        std::string msg = "non-finite value in loss term '" + term + "'";
        if (pixel >= 0) msg += " at pixel " + std::to_string(pixel);
        return msg;
    }

    std::string term_;
    std::ptrdiff_t pixel_;
};

} // namespace gstuda
