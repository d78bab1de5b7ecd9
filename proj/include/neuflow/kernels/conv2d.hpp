#pragma once

#include <cstdint>
#include <vector>

#include "neuflow/kernels/gemm.hpp"

namespace neuflow::kernels {

struct Conv2dDims {
  int64_t c_in, h, w;
  int64_t c_out, kh, kw;
  int64_t stride, pad;
  int64_t out_h() const { return (h + 2 * pad - kh) / stride + 1; }
  int64_t out_w() const { return (w + 2 * pad - kw) / stride + 1; }
};

// col is (c_in*kh*kw) x (out_h*out_w); row r = (c*kh + ky)*kw + kx.
template <class T>
void im2col(const Conv2dDims& d, const T* x, T* col) {
  const int64_t oh = d.out_h(), ow = d.out_w();
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < d.c_in * d.kh * d.kw; ++r) {
    const int64_t c = r / (d.kh * d.kw);
    const int64_t ky = (r / d.kw) % d.kh;
    const int64_t kx = r % d.kw;
    const T* xc = x + c * d.h * d.w;
    T* dst = col + r * oh * ow;
    for (int64_t oy = 0; oy < oh; ++oy) {
      const int64_t iy = oy * d.stride - d.pad + ky;
      if (iy < 0 || iy >= d.h) {
        for (int64_t ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = T(0);
        continue;
      }
      const T* src = xc + iy * d.w;
      for (int64_t ox = 0; ox < ow; ++ox) {
        const int64_t ix = ox * d.stride - d.pad + kx;
        dst[oy * ow + ox] = (ix >= 0 && ix < d.w) ? src[ix] : T(0);
      }
    }
  }
}

// Adjoint of im2col: accumulate column-matrix gradients back into dx.
// Parallel over input channels; the 9 kernel rows of one channel are summed
// serially so there are no write races.
template <class T>
void col2im(const Conv2dDims& d, const T* col, T* dx) {
  const int64_t oh = d.out_h(), ow = d.out_w();
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < d.c_in; ++c) {
    T* xc = dx + c * d.h * d.w;
    for (int64_t ky = 0; ky < d.kh; ++ky)
      for (int64_t kx = 0; kx < d.kw; ++kx) {
        const T* src = col + ((c * d.kh + ky) * d.kw + kx) * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * d.stride - d.pad + ky;
          if (iy < 0 || iy >= d.h) continue;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * d.stride - d.pad + kx;
            if (ix >= 0 && ix < d.w) xc[iy * d.w + ix] += src[oy * ow + ox];
          }
        }
      }
  }
}

// out = w * im2col(x) + b; out is c_out x out_h x out_w.
template <class T>
void conv2d_forward(const Conv2dDims& d, const T* x, const T* w, const T* b,
                    T* out) {
  const int64_t ohw = d.out_h() * d.out_w();
  const int64_t ck = d.c_in * d.kh * d.kw;
  std::vector<T> col(static_cast<size_t>(ck * ohw));
  im2col(d, x, col.data());
  gemm_nn(d.c_out, ck, ohw, w, col.data(), out);
  if (b) {
#pragma omp parallel for schedule(static)
    for (int64_t o = 0; o < d.c_out; ++o) {
      T* row = out + o * ohw;
      const T bo = b[o];
      for (int64_t i = 0; i < ohw; ++i) row[i] += bo;
    }
  }
}

// Gradients w.r.t. x, w, b given dout. Any of dx/dw/db may be null.
// The column matrix is recomputed here rather than cached by the tape.
template <class T>
void conv2d_backward(const Conv2dDims& d, const T* x, const T* w,
                     const T* dout, T* dx, T* dw, T* db) {
  const int64_t ohw = d.out_h() * d.out_w();
  const int64_t ck = d.c_in * d.kh * d.kw;
  if (db) {
#pragma omp parallel for schedule(static)
    for (int64_t o = 0; o < d.c_out; ++o) {
      T s = 0;
      const T* row = dout + o * ohw;
#pragma omp simd reduction(+ : s)
      for (int64_t i = 0; i < ohw; ++i) s += row[i];
      db[o] += s;
    }
  }
  if (dw) {
    std::vector<T> col(static_cast<size_t>(ck * ohw));
    im2col(d, x, col.data());
    gemm_nt(d.c_out, ohw, ck, dout, col.data(), dw, /*accumulate=*/true);
  }
  if (dx) {
    std::vector<T> wt(static_cast<size_t>(ck * d.c_out));
    transpose(d.c_out, ck, w, wt.data());
    std::vector<T> colg(static_cast<size_t>(ck * ohw));
    gemm_nn(ck, d.c_out, ohw, wt.data(), dout, colg.data());
    col2im(d, colg.data(), dx);
  }
}

}  // namespace neuflow::kernels
