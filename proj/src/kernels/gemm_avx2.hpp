#pragma once

#include <cstddef>

namespace gstuda::kernels::avx2 {

void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const float* A, std::size_t lda, const float* B,
             std::size_t ldb, float* C, std::size_t ldc);
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const double* A, std::size_t lda, const double* B,
             std::size_t ldb, double* C, std::size_t ldc);
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const float* A, std::size_t lda, const float* B,
             std::size_t ldb, float* C, std::size_t ldc);
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const double* A, std::size_t lda, const double* B,
             std::size_t ldb, double* C, std::size_t ldc);
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const float* A, std::size_t lda, const float* B,
             std::size_t ldb, float* C, std::size_t ldc);
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const double* A, std::size_t lda, const double* B,
             std::size_t ldb, double* C, std::size_t ldc);

} // namespace gstuda::kernels::avx2
