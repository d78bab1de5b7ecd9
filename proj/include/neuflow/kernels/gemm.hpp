#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>

namespace neuflow::kernels {

// Row-major C(MxN) = A(MxK) * B(KxN), optionally accumulating into C.
// Broadcast-A / stream-B form: each B row is reused for a 4-row panel of C,
// and the n loop vectorizes to FMAs.
template <class T>
void gemm_nn(int64_t M, int64_t K, int64_t N, const T* A, const T* B, T* C,
             bool accumulate = false) {
  if (!accumulate) std::fill(C, C + M * N, T(0));
#pragma omp parallel for schedule(static)
  for (int64_t m0 = 0; m0 < M; m0 += 4) {
    const int64_t mb = std::min<int64_t>(4, M - m0);
    if (mb == 4) {
      T* __restrict c0 = C + (m0 + 0) * N;
      T* __restrict c1 = C + (m0 + 1) * N;
      T* __restrict c2 = C + (m0 + 2) * N;
      T* __restrict c3 = C + (m0 + 3) * N;
      for (int64_t k = 0; k < K; ++k) {
        const T* __restrict b = B + k * N;
        const T a0 = A[(m0 + 0) * K + k];
        const T a1 = A[(m0 + 1) * K + k];
        const T a2 = A[(m0 + 2) * K + k];
        const T a3 = A[(m0 + 3) * K + k];
#pragma omp simd
        for (int64_t n = 0; n < N; ++n) {
          c0[n] += a0 * b[n];
          c1[n] += a1 * b[n];
          c2[n] += a2 * b[n];
          c3[n] += a3 * b[n];
        }
      }
    } else {
      for (int64_t m = m0; m < m0 + mb; ++m) {
        T* __restrict c = C + m * N;
        for (int64_t k = 0; k < K; ++k) {
          const T a = A[m * K + k];
          const T* __restrict b = B + k * N;
#pragma omp simd
          for (int64_t n = 0; n < N; ++n) c[n] += a * b[n];
        }
      }
    }
  }
}

// Row-major C(MxN) = A(MxK) * B(NxK)^T. Dot-product form; B rows are
// contiguous, so the k loop vectorizes as a reduction. Four A rows share
// each streamed B row.
template <class T>
void gemm_nt(int64_t M, int64_t K, int64_t N, const T* A, const T* B, T* C,
             bool accumulate = false) {
#pragma omp parallel for schedule(static)
  for (int64_t m0 = 0; m0 < M; m0 += 4) {
    const int64_t mb = std::min<int64_t>(4, M - m0);
    if (mb == 4) {
      const T* __restrict a0 = A + (m0 + 0) * K;
      const T* __restrict a1 = A + (m0 + 1) * K;
      const T* __restrict a2 = A + (m0 + 2) * K;
      const T* __restrict a3 = A + (m0 + 3) * K;
      for (int64_t n = 0; n < N; ++n) {
        const T* __restrict b = B + n * K;
        T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
        for (int64_t k = 0; k < K; ++k) {
          s0 += a0[k] * b[k];
          s1 += a1[k] * b[k];
          s2 += a2[k] * b[k];
          s3 += a3[k] * b[k];
        }
        if (accumulate) {
          C[(m0 + 0) * N + n] += s0;
          C[(m0 + 1) * N + n] += s1;
          C[(m0 + 2) * N + n] += s2;
          C[(m0 + 3) * N + n] += s3;
        } else {
          C[(m0 + 0) * N + n] = s0;
          C[(m0 + 1) * N + n] = s1;
          C[(m0 + 2) * N + n] = s2;
          C[(m0 + 3) * N + n] = s3;
        }
      }
    } else {
      for (int64_t m = m0; m < m0 + mb; ++m) {
        const T* __restrict a = A + m * K;
        for (int64_t n = 0; n < N; ++n) {
          const T* __restrict b = B + n * K;
          T s = 0;
#pragma omp simd reduction(+ : s)
          for (int64_t k = 0; k < K; ++k) s += a[k] * b[k];
          C[m * N + n] = accumulate ? C[m * N + n] + s : s;
        }
      }
    }
  }
}

template <class T>
void transpose(int64_t M, int64_t N, const T* in, T* out) {
#pragma omp parallel for schedule(static)
  for (int64_t m = 0; m < M; ++m)
    for (int64_t n = 0; n < N; ++n) out[n * M + m] = in[m * N + n];
}

}  // namespace neuflow::kernels
