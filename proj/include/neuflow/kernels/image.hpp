#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace neuflow::kernels {

template <class T>
inline T clampv(T v, T lo, T hi) {
  return std::min(std::max(v, lo), hi);
}

// Half-pixel-center bilinear resize with edge clamping, CHW.
template <class T>
void bilinear_resize(int64_t c, int64_t h, int64_t w, int64_t oh, int64_t ow,
                     const T* in, T* out) {
  const double sy = static_cast<double>(h) / oh;
  const double sx = static_cast<double>(w) / ow;
#pragma omp parallel for schedule(static)
  for (int64_t ch = 0; ch < c; ++ch) {
    const T* src = in + ch * h * w;
    T* dst = out + ch * oh * ow;
    for (int64_t oy = 0; oy < oh; ++oy) {
      const double fy = (oy + 0.5) * sy - 0.5;
      const int64_t y0 = static_cast<int64_t>(std::floor(fy));
      const double wy = fy - y0;
      const int64_t y0c = clampv<int64_t>(y0, 0, h - 1);
      const int64_t y1c = clampv<int64_t>(y0 + 1, 0, h - 1);
      for (int64_t ox = 0; ox < ow; ++ox) {
        const double fx = (ox + 0.5) * sx - 0.5;
        const int64_t x0 = static_cast<int64_t>(std::floor(fx));
        const double wx = fx - x0;
        const int64_t x0c = clampv<int64_t>(x0, 0, w - 1);
        const int64_t x1c = clampv<int64_t>(x0 + 1, 0, w - 1);
        const double v = (1 - wy) * ((1 - wx) * src[y0c * w + x0c] + wx * src[y0c * w + x1c]) +
                         wy * ((1 - wx) * src[y1c * w + x0c] + wx * src[y1c * w + x1c]);
        dst[oy * ow + ox] = static_cast<T>(v);
      }
    }
  }
}

// Adjoint of bilinear_resize; accumulates into din (parallel per channel).
template <class T>
void bilinear_resize_backward(int64_t c, int64_t h, int64_t w, int64_t oh,
                              int64_t ow, const T* dout, T* din) {
  const double sy = static_cast<double>(h) / oh;
  const double sx = static_cast<double>(w) / ow;
#pragma omp parallel for schedule(static)
  for (int64_t ch = 0; ch < c; ++ch) {
    const T* g = dout + ch * oh * ow;
    T* d = din + ch * h * w;
    for (int64_t oy = 0; oy < oh; ++oy) {
      const double fy = (oy + 0.5) * sy - 0.5;
      const int64_t y0 = static_cast<int64_t>(std::floor(fy));
      const double wy = fy - y0;
      const int64_t y0c = clampv<int64_t>(y0, 0, h - 1);
      const int64_t y1c = clampv<int64_t>(y0 + 1, 0, h - 1);
      for (int64_t ox = 0; ox < ow; ++ox) {
        const double fx = (ox + 0.5) * sx - 0.5;
        const int64_t x0 = static_cast<int64_t>(std::floor(fx));
        const double wx = fx - x0;
        const int64_t x0c = clampv<int64_t>(x0, 0, w - 1);
        const int64_t x1c = clampv<int64_t>(x0 + 1, 0, w - 1);
        const T go = g[oy * ow + ox];
        d[y0c * w + x0c] += static_cast<T>((1 - wy) * (1 - wx)) * go;
        d[y0c * w + x1c] += static_cast<T>((1 - wy) * wx) * go;
        d[y1c * w + x0c] += static_cast<T>(wy * (1 - wx)) * go;
        d[y1c * w + x1c] += static_cast<T>(wy * wx) * go;
      }
    }
  }
}

// 2x box-average downsample (area interpolation for even dims), CHW.
template <class T>
void area_down2(int64_t c, int64_t h, int64_t w, const T* in, T* out) {
  const int64_t oh = h / 2, ow = w / 2;
#pragma omp parallel for schedule(static)
  for (int64_t ch = 0; ch < c; ++ch) {
    const T* src = in + ch * h * w;
    T* dst = out + ch * oh * ow;
    for (int64_t y = 0; y < oh; ++y)
      for (int64_t x = 0; x < ow; ++x) {
        const T* p = src + 2 * y * w + 2 * x;
        dst[y * ow + x] = static_cast<T>(0.25) * (p[0] + p[1] + p[w] + p[w + 1]);
      }
  }
}

template <class T>
void area_down2_backward(int64_t c, int64_t h, int64_t w, const T* dout, T* din) {
  const int64_t oh = h / 2, ow = w / 2;
#pragma omp parallel for schedule(static)
  for (int64_t ch = 0; ch < c; ++ch) {
    const T* g = dout + ch * oh * ow;
    T* d = din + ch * h * w;
    for (int64_t y = 0; y < oh; ++y)
      for (int64_t x = 0; x < ow; ++x) {
        const T q = static_cast<T>(0.25) * g[y * ow + x];
        T* p = d + 2 * y * w + 2 * x;
        p[0] += q;
        p[1] += q;
        p[w] += q;
        p[w + 1] += q;
      }
  }
}

// Backward-warp x (CHW) by flow (2HW, channel 0 = u, 1 = v):
// out[c,y,x] = bilinear x at (x+u, y+v); samples outside the grid read 0.
template <class T>
void warp_zero(int64_t c, int64_t h, int64_t w, const T* x, const T* flow, T* out) {
  const T* u = flow;
  const T* v = flow + h * w;
#pragma omp parallel for schedule(static)
  for (int64_t y = 0; y < h; ++y)
    for (int64_t xx = 0; xx < w; ++xx) {
      const int64_t p = y * w + xx;
      const double fx = xx + static_cast<double>(u[p]);
      const double fy = y + static_cast<double>(v[p]);
      const int64_t x0 = static_cast<int64_t>(std::floor(fx));
      const int64_t y0 = static_cast<int64_t>(std::floor(fy));
      const double wx = fx - x0, wy = fy - y0;
      const bool in00 = x0 >= 0 && x0 < w && y0 >= 0 && y0 < h;
      const bool in10 = x0 + 1 >= 0 && x0 + 1 < w && y0 >= 0 && y0 < h;
      const bool in01 = x0 >= 0 && x0 < w && y0 + 1 >= 0 && y0 + 1 < h;
      const bool in11 = x0 + 1 >= 0 && x0 + 1 < w && y0 + 1 >= 0 && y0 + 1 < h;
      for (int64_t ch = 0; ch < c; ++ch) {
        const T* src = x + ch * h * w;
        double acc = 0;
        if (in00) acc += (1 - wy) * (1 - wx) * src[y0 * w + x0];
        if (in10) acc += (1 - wy) * wx * src[y0 * w + x0 + 1];
        if (in01) acc += wy * (1 - wx) * src[(y0 + 1) * w + x0];
        if (in11) acc += wy * wx * src[(y0 + 1) * w + x0 + 1];
        out[ch * h * w + p] = static_cast<T>(acc);
      }
    }
}

// Gradients of warp_zero w.r.t. both the warped map and the flow.
// dx is scattered per channel (no races across ch); dflow is gathered.
template <class T>
void warp_zero_backward(int64_t c, int64_t h, int64_t w, const T* x,
                        const T* flow, const T* dout, T* dx, T* dflow) {
  const T* u = flow;
  const T* v = flow + h * w;
  if (dx) {
#pragma omp parallel for schedule(static)
    for (int64_t ch = 0; ch < c; ++ch) {
      T* d = dx + ch * h * w;
      const T* g = dout + ch * h * w;
      for (int64_t y = 0; y < h; ++y)
        for (int64_t xx = 0; xx < w; ++xx) {
          const int64_t p = y * w + xx;
          const double fx = xx + static_cast<double>(u[p]);
          const double fy = y + static_cast<double>(v[p]);
          const int64_t x0 = static_cast<int64_t>(std::floor(fx));
          const int64_t y0 = static_cast<int64_t>(std::floor(fy));
          const double wx = fx - x0, wy = fy - y0;
          const T go = g[p];
          if (x0 >= 0 && x0 < w && y0 >= 0 && y0 < h)
            d[y0 * w + x0] += static_cast<T>((1 - wy) * (1 - wx)) * go;
          if (x0 + 1 >= 0 && x0 + 1 < w && y0 >= 0 && y0 < h)
            d[y0 * w + x0 + 1] += static_cast<T>((1 - wy) * wx) * go;
          if (x0 >= 0 && x0 < w && y0 + 1 >= 0 && y0 + 1 < h)
            d[(y0 + 1) * w + x0] += static_cast<T>(wy * (1 - wx)) * go;
          if (x0 + 1 >= 0 && x0 + 1 < w && y0 + 1 >= 0 && y0 + 1 < h)
            d[(y0 + 1) * w + x0 + 1] += static_cast<T>(wy * wx) * go;
        }
    }
  }
  if (dflow) {
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < h * w; ++p) {
      const int64_t y = p / w, xx = p % w;
      const double fx = xx + static_cast<double>(u[p]);
      const double fy = y + static_cast<double>(v[p]);
      const int64_t x0 = static_cast<int64_t>(std::floor(fx));
      const int64_t y0 = static_cast<int64_t>(std::floor(fy));
      const double wx = fx - x0, wy = fy - y0;
      double du = 0, dv = 0;
      for (int64_t ch = 0; ch < c; ++ch) {
        const T* src = x + ch * h * w;
        const double go = dout[ch * h * w + p];
        double v00 = 0, v10 = 0, v01 = 0, v11 = 0;
        if (x0 >= 0 && x0 < w && y0 >= 0 && y0 < h) v00 = src[y0 * w + x0];
        if (x0 + 1 >= 0 && x0 + 1 < w && y0 >= 0 && y0 < h) v10 = src[y0 * w + x0 + 1];
        if (x0 >= 0 && x0 < w && y0 + 1 >= 0 && y0 + 1 < h) v01 = src[(y0 + 1) * w + x0];
        if (x0 + 1 >= 0 && x0 + 1 < w && y0 + 1 >= 0 && y0 + 1 < h)
          v11 = src[(y0 + 1) * w + x0 + 1];
        du += go * ((1 - wy) * (v10 - v00) + wy * (v11 - v01));
        dv += go * ((1 - wx) * (v01 - v00) + wx * (v11 - v10));
      }
      dflow[p] += static_cast<T>(du);
      dflow[h * w + p] += static_cast<T>(dv);
    }
  }
}

}  // namespace neuflow::kernels
