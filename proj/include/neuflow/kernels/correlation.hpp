#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace neuflow::kernels {

// Local cost volume: vol[(dy+r)*(2r+1)+(dx+r), y, x]
//   = dot(f0[:,y,x], f1[:,y+dy,x+dx]) / sqrt(c), zero when the f1 sample
// falls outside the grid. Channel 40 is the zero displacement for r=4.
// Features are transposed to HWC scratch first so the dot product runs over
// contiguous memory.
template <class T>
void local_correlation(int64_t c, int64_t h, int64_t w, int64_t r, const T* f0,
                       const T* f1, T* vol) {
  const int64_t hw = h * w, D = 2 * r + 1;
  const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(c)));
  std::vector<T> a(static_cast<size_t>(hw * c)), b(static_cast<size_t>(hw * c));
#pragma omp parallel for schedule(static)
  for (int64_t p = 0; p < hw; ++p)
    for (int64_t ch = 0; ch < c; ++ch) {
      a[p * c + ch] = f0[ch * hw + p];
      b[p * c + ch] = f1[ch * hw + p];
    }
#pragma omp parallel for schedule(static)
  for (int64_t d = 0; d < D * D; ++d) {
    const int64_t dy = d / D - r, dx = d % D - r;
    T* out = vol + d * hw;
    for (int64_t y = 0; y < h; ++y) {
      const int64_t sy = y + dy;
      for (int64_t x = 0; x < w; ++x) {
        const int64_t sx = x + dx;
        if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
          out[y * w + x] = T(0);
          continue;
        }
        const T* pa = &a[(y * w + x) * c];
        const T* pb = &b[(sy * w + sx) * c];
        T s = 0;
#pragma omp simd reduction(+ : s)
        for (int64_t ch = 0; ch < c; ++ch) s += pa[ch] * pb[ch];
        out[y * w + x] = s * inv;
      }
    }
  }
}

template <class T>
void local_correlation_backward(int64_t c, int64_t h, int64_t w, int64_t r,
                                const T* f0, const T* f1, const T* dvol,
                                T* df0, T* df1) {
  const int64_t hw = h * w, D = 2 * r + 1;
  const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(c)));
  if (df0) {
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < hw; ++p) {
      const int64_t y = p / w, x = p % w;
      for (int64_t d = 0; d < D * D; ++d) {
        const int64_t sy = y + d / D - r, sx = x + d % D - r;
        if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
        const T g = dvol[d * hw + p] * inv;
        if (g == T(0)) continue;
        const int64_t q = sy * w + sx;
        for (int64_t ch = 0; ch < c; ++ch) df0[ch * hw + p] += g * f1[ch * hw + q];
      }
    }
  }
  if (df1) {
    // scatter into f1 positions; serial over displacements to avoid races
    for (int64_t d = 0; d < D * D; ++d) {
      const int64_t dy = d / D - r, dx = d % D - r;
      const T* g = dvol + d * hw;
#pragma omp parallel for schedule(static)
      for (int64_t ch = 0; ch < c; ++ch) {
        const T* src = f0 + ch * hw;
        T* dst = df1 + ch * hw;
        for (int64_t y = 0; y < h; ++y) {
          const int64_t sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          for (int64_t x = 0; x < w; ++x) {
            const int64_t sx = x + dx;
            if (sx < 0 || sx >= w) continue;
            dst[sy * w + sx] += g[y * w + x] * inv * src[y * w + x];
          }
        }
      }
    }
  }
}

}  // namespace neuflow::kernels
