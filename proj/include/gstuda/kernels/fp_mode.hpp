#pragma once

// Flush-to-zero / denormals-are-zero for the calling thread while in scope.
// Saturated sigmoid and dropout paths otherwise produce subnormal floats that
// run an order of magnitude slower. No-op off x86.

#if defined(__x86_64__) || defined(_M_X64) || defined(__SSE2__)
#include <xmmintrin.h>
#define GSTUDA_HAVE_MXCSR 1
#endif

namespace gstuda::kernels {

class ScopedFlushDenormals {
public:
    ScopedFlushDenormals() noexcept {
#ifdef GSTUDA_HAVE_MXCSR
        saved_ = _mm_getcsr();
        _mm_setcsr(saved_ | 0x8040u); // FTZ | DAZ
#endif
    }
    ~ScopedFlushDenormals() {
#ifdef GSTUDA_HAVE_MXCSR
        _mm_setcsr(saved_);
#endif
    }
    ScopedFlushDenormals(const ScopedFlushDenormals&) = delete;
    ScopedFlushDenormals& operator=(const ScopedFlushDenormals&) = delete;

private:
    unsigned saved_ = 0;
};

} // namespace gstuda::kernels
