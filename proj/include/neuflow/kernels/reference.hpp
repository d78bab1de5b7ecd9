#pragma once

// Serial nested-loop reference kernels. These are deliberately naive and
// share no code with the OpenMP implementations; tests compare the two and
// kernel_bench reports the speedup.

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace neuflow::ref {

template <class T>
void gemm_nn(int64_t M, int64_t K, int64_t N, const T* A, const T* B, T* C) {
  for (int64_t m = 0; m < M; ++m)
    for (int64_t n = 0; n < N; ++n) {
      T s = 0;
      for (int64_t k = 0; k < K; ++k) s += A[m * K + k] * B[k * N + n];
      C[m * N + n] = s;
    }
}

template <class T>
void conv2d(int64_t ci, int64_t h, int64_t w, int64_t co, int64_t kh, int64_t kw,
            int64_t stride, int64_t pad, const T* x, const T* wt, const T* b,
            T* out) {
  const int64_t oh = (h + 2 * pad - kh) / stride + 1;
  const int64_t ow = (w + 2 * pad - kw) / stride + 1;
  for (int64_t o = 0; o < co; ++o)
    for (int64_t y = 0; y < oh; ++y)
      for (int64_t xx = 0; xx < ow; ++xx) {
        double s = b ? b[o] : 0.0;
        for (int64_t c = 0; c < ci; ++c)
          for (int64_t ky = 0; ky < kh; ++ky)
            for (int64_t kx = 0; kx < kw; ++kx) {
              const int64_t iy = y * stride - pad + ky;
              const int64_t ix = xx * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              s += static_cast<double>(x[(c * h + iy) * w + ix]) *
                   wt[((o * ci + c) * kh + ky) * kw + kx];
            }
        out[(o * oh + y) * ow + xx] = static_cast<T>(s);
      }
}

template <class T>
void local_correlation(int64_t c, int64_t h, int64_t w, int64_t r, const T* f0,
                       const T* f1, T* vol) {
  const int64_t D = 2 * r + 1, hw = h * w;
  const double inv = 1.0 / std::sqrt(static_cast<double>(c));
  for (int64_t dy = -r; dy <= r; ++dy)
    for (int64_t dx = -r; dx <= r; ++dx) {
      const int64_t d = (dy + r) * D + (dx + r);
      for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
          double s = 0;
          if (y + dy >= 0 && y + dy < h && x + dx >= 0 && x + dx < w)
            for (int64_t ch = 0; ch < c; ++ch)
              s += static_cast<double>(f0[ch * hw + y * w + x]) *
                   f1[ch * hw + (y + dy) * w + (x + dx)];
          vol[d * hw + y * w + x] = static_cast<T>(s * inv);
        }
    }
}

template <class T>
void warp_zero(int64_t c, int64_t h, int64_t w, const T* x, const T* flow, T* out) {
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t xx = 0; xx < w; ++xx) {
        const double fx = xx + static_cast<double>(flow[y * w + xx]);
        const double fy = y + static_cast<double>(flow[h * w + y * w + xx]);
        const int64_t x0 = static_cast<int64_t>(std::floor(fx));
        const int64_t y0 = static_cast<int64_t>(std::floor(fy));
        const double wx = fx - x0, wy = fy - y0;
        double s = 0;
        for (int64_t dy = 0; dy <= 1; ++dy)
          for (int64_t dx = 0; dx <= 1; ++dx) {
            const int64_t yy = y0 + dy, xc = x0 + dx;
            if (yy < 0 || yy >= h || xc < 0 || xc >= w) continue;
            const double wgt = (dy ? wy : 1 - wy) * (dx ? wx : 1 - wx);
            s += wgt * x[ch * h * w + yy * w + xc];
          }
        out[ch * h * w + y * w + xx] = static_cast<T>(s);
      }
}

template <class T>
void bilinear_resize(int64_t c, int64_t h, int64_t w, int64_t oh, int64_t ow,
                     const T* in, T* out) {
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox) {
        const double fy = (oy + 0.5) * h / oh - 0.5;
        const double fx = (ox + 0.5) * w / ow - 0.5;
        const int64_t y0 = static_cast<int64_t>(std::floor(fy));
        const int64_t x0 = static_cast<int64_t>(std::floor(fx));
        const double wy = fy - y0, wx = fx - x0;
        double s = 0;
        for (int64_t dy = 0; dy <= 1; ++dy)
          for (int64_t dx = 0; dx <= 1; ++dx) {
            const int64_t yy = std::clamp<int64_t>(y0 + dy, 0, h - 1);
            const int64_t xc = std::clamp<int64_t>(x0 + dx, 0, w - 1);
            s += (dy ? wy : 1 - wy) * (dx ? wx : 1 - wx) * in[ch * h * w + yy * w + xc];
          }
        out[ch * oh * ow + oy * ow + ox] = static_cast<T>(s);
      }
}

template <class T>
void convex_upsample8(int64_t h, int64_t w, const T* flow, const T* mask, T* out) {
  const int64_t hw = h * w, ow = 8 * w;
  for (int64_t ch = 0; ch < 2; ++ch)
    for (int64_t oy = 0; oy < 8 * h; ++oy)
      for (int64_t ox = 0; ox < 8 * w; ++ox) {
        const int64_t y = oy / 8, x = ox / 8;
        const int64_t sub = (oy % 8) * 8 + ox % 8;
        double s = 0;
        for (int64_t k = 0; k < 9; ++k) {
          const int64_t ny = std::clamp<int64_t>(y + k / 3 - 1, 0, h - 1);
          const int64_t nx = std::clamp<int64_t>(x + k % 3 - 1, 0, w - 1);
          s += static_cast<double>(mask[(k * 64 + sub) * hw + y * w + x]) *
               flow[ch * hw + ny * w + nx];
        }
        out[ch * 64 * hw + oy * ow + ox] = static_cast<T>(8.0 * s);
      }
}

// Endpoint-error metrics, loop form (the test oracle for the fast path).
inline double epe(int64_t h, int64_t w, const float* pred, const float* gt,
                  const uint8_t* valid, bool* any) {
  double s = 0;
  int64_t n = 0;
  for (int64_t p = 0; p < h * w; ++p) {
    if (valid && !valid[p]) continue;
    const double du = static_cast<double>(pred[p]) - gt[p];
    const double dv = static_cast<double>(pred[h * w + p]) - gt[h * w + p];
    s += std::sqrt(du * du + dv * dv);
    ++n;
  }
  if (any) *any = n > 0;
  return n ? s / n : 0.0;
}

inline double f1_all(int64_t h, int64_t w, const float* pred, const float* gt,
                     const uint8_t* valid, bool* any) {
  int64_t n = 0, bad = 0;
  for (int64_t p = 0; p < h * w; ++p) {
    if (valid && !valid[p]) continue;
    const double du = static_cast<double>(pred[p]) - gt[p];
    const double dv = static_cast<double>(pred[h * w + p]) - gt[h * w + p];
    const double err = std::sqrt(du * du + dv * dv);
    const double mag = std::sqrt(static_cast<double>(gt[p]) * gt[p] +
                                 static_cast<double>(gt[h * w + p]) * gt[h * w + p]);
    if (err > 3.0 && err > 0.05 * mag) ++bad;
    ++n;
  }
  if (any) *any = n > 0;
  return n ? 100.0 * bad / n : 0.0;
}

}  // namespace neuflow::ref
