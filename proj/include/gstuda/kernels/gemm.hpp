#pragma once

// Dense matrix kernels behind every convolution. All matrices are row-major
// with explicit leading dimensions and all routines accumulate into C.
//
//   gemm_nn: C[M x N] += A[M x K]   * B[K x N]
//   gemm_tn: C[M x N] += A[K x M]^T * B[K x N]
//   gemm_nt: C[M x N] += A[M x K]   * B[N x K]^T
//
// Each routine has a portable scalar reference and, on x86-64, an AVX2+FMA
// variant chosen at runtime. Results differ from the reference only by
// floating-point summation order.

#include <cstddef>
#include <string_view>

namespace gstuda::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa) noexcept;

/// Best ISA supported by both the build and the running CPU.
Isa detected_isa() noexcept;
/// ISA currently used for dispatch; defaults to detected_isa().
Isa active_isa() noexcept;
/// Override dispatch (e.g. GSTUDA_FORCE_SCALAR, equivalence tests). Requests
/// for an unavailable ISA fall back to scalar. Returns the ISA in effect.
Isa set_active_isa(Isa isa) noexcept;

template <class T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B, std::size_t ldb,
             T* C, std::size_t ldc);
template <class T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B, std::size_t ldb,
             T* C, std::size_t ldc);
template <class T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B, std::size_t ldb,
             T* C, std::size_t ldc);

/// Explicit-ISA entry points, used by the equivalence tests.
template <class T>
void gemm_nn(Isa isa, std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc);
template <class T>
void gemm_tn(Isa isa, std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc);
template <class T>
void gemm_nt(Isa isa, std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc);

} // namespace gstuda::kernels
