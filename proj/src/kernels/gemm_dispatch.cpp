#include "gstuda/kernels/gemm.hpp"

#include "gemm_scalar.hpp"
#if GSTUDA_HAVE_AVX2
#include "gemm_avx2.hpp"
#endif

#include <atomic>
#include <cstdlib>

namespace gstuda::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if GSTUDA_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa initial_isa() noexcept {
    if (const char* env = std::getenv("GSTUDA_FORCE_SCALAR"); env && *env && *env != '0') return Isa::scalar;
    return detected_isa();
}

std::atomic<Isa>& active() noexcept {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

} // namespace

std::string_view to_string(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() noexcept {
    static const Isa isa = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
    return isa;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

Isa set_active_isa(Isa isa) noexcept {
    if (isa == Isa::avx2 && detected_isa() != Isa::avx2) isa = Isa::scalar;
    active().store(isa, std::memory_order_relaxed);
    return isa;
}

#if GSTUDA_HAVE_AVX2
#define GSTUDA_DISPATCH(name)                                            \
    if (isa == Isa::avx2 && detected_isa() == Isa::avx2)                 \
        return avx2::name(M, N, K, A, lda, B, ldb, C, ldc);              \
    return scalar::name(M, N, K, A, lda, B, ldb, C, ldc)
#else
#define GSTUDA_DISPATCH(name) return scalar::name(M, N, K, A, lda, B, ldb, C, ldc)
#endif

template <class T>
void gemm_nn(Isa isa, std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc) {
    GSTUDA_DISPATCH(gemm_nn);
}
template <class T>
void gemm_tn(Isa isa, std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc) {
    GSTUDA_DISPATCH(gemm_tn);
}
template <class T>
void gemm_nt(Isa isa, std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc) {
    GSTUDA_DISPATCH(gemm_nt);
}

#undef GSTUDA_DISPATCH

template <class T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B, std::size_t ldb,
             T* C, std::size_t ldc) {
    gemm_nn<T>(active_isa(), M, N, K, A, lda, B, ldb, C, ldc);
}
template <class T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B, std::size_t ldb,
             T* C, std::size_t ldc) {
    gemm_tn<T>(active_isa(), M, N, K, A, lda, B, ldb, C, ldc);
}
template <class T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B, std::size_t ldb,
             T* C, std::size_t ldc) {
    gemm_nt<T>(active_isa(), M, N, K, A, lda, B, ldb, C, ldc);
}

#define GSTUDA_INSTANTIATE(T)                                                                                       \
    template void gemm_nn<T>(Isa, std::size_t, std::size_t, std::size_t, const T*, std::size_t, const T*,          \
                             std::size_t, T*, std::size_t);                                                         \
    template void gemm_tn<T>(Isa, std::size_t, std::size_t, std::size_t, const T*, std::size_t, const T*,          \
                             std::size_t, T*, std::size_t);                                                         \
    template void gemm_nt<T>(Isa, std::size_t, std::size_t, std::size_t, const T*, std::size_t, const T*,          \
                             std::size_t, T*, std::size_t);                                                         \
    template void gemm_nn<T>(std::size_t, std::size_t, std::size_t, const T*, std::size_t, const T*, std::size_t,  \
                             T*, std::size_t);                                                                      \
    template void gemm_tn<T>(std::size_t, std::size_t, std::size_t, const T*, std::size_t, const T*, std::size_t,  \
                             T*, std::size_t);                                                                      \
    template void gemm_nt<T>(std::size_t, std::size_t, std::size_t, const T*, std::size_t, const T*, std::size_t,  \
                             T*, std::size_t);

GSTUDA_INSTANTIATE(float)
GSTUDA_INSTANTIATE(double)

#undef GSTUDA_INSTANTIATE

} // namespace gstuda::kernels
