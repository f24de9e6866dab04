// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after a runtime CPU check.

#include "gemm_avx2.hpp"

#include <immintrin.h>

namespace gstuda::kernels::avx2 {

namespace {

struct F32 {
    using T = float;
    using V = __m256;
    static constexpr std::size_t W = 8;
    static V zero() { return _mm256_setzero_ps(); }
    static V load(const T* p) { return _mm256_loadu_ps(p); }
    static void store(T* p, V v) { _mm256_storeu_ps(p, v); }
    static V set1(T x) { return _mm256_set1_ps(x); }
    static V fma(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
    static V add(V a, V b) { return _mm256_add_ps(a, b); }
    static T hsum(V v) {
        __m128 lo = _mm256_castps256_ps128(v);
        __m128 hi = _mm256_extractf128_ps(v, 1);
        lo = _mm_add_ps(lo, hi);
        __m128 shuf = _mm_movehdup_ps(lo);
        __m128 sums = _mm_add_ps(lo, shuf);
        shuf = _mm_movehl_ps(shuf, sums);
        sums = _mm_add_ss(sums, shuf);
        return _mm_cvtss_f32(sums);
    }
};

struct F64 {
    using T = double;
    using V = __m256d;
    static constexpr std::size_t W = 4;
    static V zero() { return _mm256_setzero_pd(); }
    static V load(const T* p) { return _mm256_loadu_pd(p); }
    static void store(T* p, V v) { _mm256_storeu_pd(p, v); }
    static V set1(T x) { return _mm256_set1_pd(x); }
    static V fma(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
    static V add(V a, V b) { return _mm256_add_pd(a, b); }
    static T hsum(V v) {
        __m128d lo = _mm256_castpd256_pd128(v);
        __m128d hi = _mm256_extractf128_pd(v, 1);
        lo = _mm_add_pd(lo, hi);
        __m128d high64 = _mm_unpackhi_pd(lo, lo);
        return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
    }
};

// C[M x N] += A' * B where A'(i, k) = A[i * rs + k * cs]. Covers both the
// nn (rs = lda, cs = 1) and tn (rs = 1, cs = lda) layouts. Columns are
// processed in panels of two vectors so a K x panel slice of B stays hot
// while the 4-row blocks of A sweep over it.
template <class S>
void gemm_strided_a(std::size_t M, std::size_t N, std::size_t K, const typename S::T* A, std::size_t rs,
                    std::size_t cs, const typename S::T* B, std::size_t ldb, typename S::T* C, std::size_t ldc) {
    using T = typename S::T;
    using V = typename S::V;
    constexpr std::size_t W = S::W;
    constexpr std::size_t Panel = 2 * W;

    std::size_t j = 0;
    for (; j + Panel <= N; j += Panel) {
        std::size_t i = 0;
        for (; i + 4 <= M; i += 4) {
            V c00 = S::load(C + (i + 0) * ldc + j), c01 = S::load(C + (i + 0) * ldc + j + W);
            V c10 = S::load(C + (i + 1) * ldc + j), c11 = S::load(C + (i + 1) * ldc + j + W);
            V c20 = S::load(C + (i + 2) * ldc + j), c21 = S::load(C + (i + 2) * ldc + j + W);
            V c30 = S::load(C + (i + 3) * ldc + j), c31 = S::load(C + (i + 3) * ldc + j + W);
            const T* a0 = A + (i + 0) * rs;
            const T* a1 = A + (i + 1) * rs;
            const T* a2 = A + (i + 2) * rs;
            const T* a3 = A + (i + 3) * rs;
            for (std::size_t k = 0; k < K; ++k) {
                const T* b = B + k * ldb + j;
                const V b0 = S::load(b), b1 = S::load(b + W);
                const std::size_t ak = k * cs;
                V a = S::set1(a0[ak]);
                c00 = S::fma(a, b0, c00);
                c01 = S::fma(a, b1, c01);
                a = S::set1(a1[ak]);
                c10 = S::fma(a, b0, c10);
                c11 = S::fma(a, b1, c11);
                a = S::set1(a2[ak]);
                c20 = S::fma(a, b0, c20);
                c21 = S::fma(a, b1, c21);
                a = S::set1(a3[ak]);
                c30 = S::fma(a, b0, c30);
                c31 = S::fma(a, b1, c31);
            }
            S::store(C + (i + 0) * ldc + j, c00), S::store(C + (i + 0) * ldc + j + W, c01);
            S::store(C + (i + 1) * ldc + j, c10), S::store(C + (i + 1) * ldc + j + W, c11);
            S::store(C + (i + 2) * ldc + j, c20), S::store(C + (i + 2) * ldc + j + W, c21);
            S::store(C + (i + 3) * ldc + j, c30), S::store(C + (i + 3) * ldc + j + W, c31);
        }
        for (; i < M; ++i) {
            V c0 = S::load(C + i * ldc + j), c1 = S::load(C + i * ldc + j + W);
            const T* ai = A + i * rs;
            for (std::size_t k = 0; k < K; ++k) {
                const T* b = B + k * ldb + j;
                const V a = S::set1(ai[k * cs]);
                c0 = S::fma(a, S::load(b), c0);
                c1 = S::fma(a, S::load(b + W), c1);
            }
            S::store(C + i * ldc + j, c0);
            S::store(C + i * ldc + j + W, c1);
        }
    }
    for (; j + W <= N; j += W) {
        for (std::size_t i = 0; i < M; ++i) {
            V c0 = S::load(C + i * ldc + j);
            const T* ai = A + i * rs;
            for (std::size_t k = 0; k < K; ++k) c0 = S::fma(S::set1(ai[k * cs]), S::load(B + k * ldb + j), c0);
            S::store(C + i * ldc + j, c0);
        }
    }
    if (j < N) {
        for (std::size_t i = 0; i < M; ++i) {
            const T* ai = A + i * rs;
            T* c = C + i * ldc;
            for (std::size_t k = 0; k < K; ++k) {
                const T a = ai[k * cs];
                const T* b = B + k * ldb;
                for (std::size_t jj = j; jj < N; ++jj) c[jj] += a * b[jj];
            }
        }
    }
}

// C[i, j] += <A row i, B row j>. Four B rows share each A load.
template <class S>
void gemm_dot(std::size_t M, std::size_t N, std::size_t K, const typename S::T* A, std::size_t lda,
              const typename S::T* B, std::size_t ldb, typename S::T* C, std::size_t ldc) {
    using T = typename S::T;
    using V = typename S::V;
    constexpr std::size_t W = S::W;
    const std::size_t kv = K - K % W;

    for (std::size_t i = 0; i < M; ++i) {
        const T* a = A + i * lda;
        std::size_t j = 0;
        for (; j + 4 <= N; j += 4) {
            const T* b0 = B + (j + 0) * ldb;
            const T* b1 = B + (j + 1) * ldb;
            const T* b2 = B + (j + 2) * ldb;
            const T* b3 = B + (j + 3) * ldb;
            V s0 = S::zero(), s1 = S::zero(), s2 = S::zero(), s3 = S::zero();
            for (std::size_t k = 0; k < kv; k += W) {
                const V av = S::load(a + k);
                s0 = S::fma(av, S::load(b0 + k), s0);
                s1 = S::fma(av, S::load(b1 + k), s1);
                s2 = S::fma(av, S::load(b2 + k), s2);
                s3 = S::fma(av, S::load(b3 + k), s3);
            }
            T r0 = S::hsum(s0), r1 = S::hsum(s1), r2 = S::hsum(s2), r3 = S::hsum(s3);
            for (std::size_t k = kv; k < K; ++k) {
                r0 += a[k] * b0[k];
                r1 += a[k] * b1[k];
                r2 += a[k] * b2[k];
                r3 += a[k] * b3[k];
            }
            C[i * ldc + j + 0] += r0;
            C[i * ldc + j + 1] += r1;
            C[i * ldc + j + 2] += r2;
            C[i * ldc + j + 3] += r3;
        }
        for (; j < N; ++j) {
            const T* b = B + j * ldb;
            V s = S::zero();
            for (std::size_t k = 0; k < kv; k += W) s = S::fma(S::load(a + k), S::load(b + k), s);
            T r = S::hsum(s);
            for (std::size_t k = kv; k < K; ++k) r += a[k] * b[k];
            C[i * ldc + j] += r;
        }
    }
}

} // namespace

void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const float* A, std::size_t lda, const float* B,
             std::size_t ldb, float* C, std::size_t ldc) {
    gemm_strided_a<F32>(M, N, K, A, lda, 1, B, ldb, C, ldc);
}
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const double* A, std::size_t lda, const double* B,
             std::size_t ldb, double* C, std::size_t ldc) {
    gemm_strided_a<F64>(M, N, K, A, lda, 1, B, ldb, C, ldc);
}
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const float* A, std::size_t lda, const float* B,
             std::size_t ldb, float* C, std::size_t ldc) {
    gemm_strided_a<F32>(M, N, K, A, 1, lda, B, ldb, C, ldc);
}
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const double* A, std::size_t lda, const double* B,
             std::size_t ldb, double* C, std::size_t ldc) {
    gemm_strided_a<F64>(M, N, K, A, 1, lda, B, ldb, C, ldc);
}
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const float* A, std::size_t lda, const float* B,
             std::size_t ldb, float* C, std::size_t ldc) {
    gemm_dot<F32>(M, N, K, A, lda, B, ldb, C, ldc);
}
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const double* A, std::size_t lda, const double* B,
             std::size_t ldb, double* C, std::size_t ldc) {
    gemm_dot<F64>(M, N, K, A, lda, B, ldb, C, ldc);
}

} // namespace gstuda::kernels::avx2
