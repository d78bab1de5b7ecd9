#pragma once

#include <algorithm>
#include <cstdint>

namespace neuflow::kernels {

// Convex upsampling by a fixed factor of 8. mask has 9*64 channels laid out
// as k*64 + (i*8 + j): neighbor tap k of the 3x3 window, fine sub-pixel
// (i, j). mask is assumed normalized over k. Flow values are scaled by 8 for
// the resolution change. Neighbor taps clamp at the border, so a convex
// combination of equal values stays equal everywhere.
template <class T>
void convex_upsample8(int64_t h, int64_t w, const T* flow, const T* mask, T* out) {
  const int64_t oh = 8 * h, ow = 8 * w, hw = h * w;
#pragma omp parallel for schedule(static)
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t i = 0; i < 8; ++i)
        for (int64_t j = 0; j < 8; ++j) {
          double acc0 = 0, acc1 = 0;  // 9-tap blend in double regardless of T
          for (int64_t k = 0; k < 9; ++k) {
            const int64_t ny = std::clamp<int64_t>(y + k / 3 - 1, 0, h - 1);
            const int64_t nx = std::clamp<int64_t>(x + k % 3 - 1, 0, w - 1);
            const double m = mask[(k * 64 + i * 8 + j) * hw + y * w + x];
            acc0 += m * flow[ny * w + nx];
            acc1 += m * flow[hw + ny * w + nx];
          }
          const int64_t o = (8 * y + i) * ow + 8 * x + j;
          out[o] = static_cast<T>(8 * acc0);
          out[oh * ow + o] = static_cast<T>(8 * acc1);
        }
    }
}

template <class T>
void convex_upsample8_backward(int64_t h, int64_t w, const T* flow, const T* mask,
                               const T* dout, T* dflow, T* dmask) {
  const int64_t oh = 8 * h, ow = 8 * w, hw = h * w;
  // dmask: pure gather, parallel over coarse pixels
  if (dmask) {
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < hw; ++p) {
      const int64_t y = p / w, x = p % w;
      for (int64_t k = 0; k < 9; ++k) {
        const int64_t ny = std::clamp<int64_t>(y + k / 3 - 1, 0, h - 1);
        const int64_t nx = std::clamp<int64_t>(x + k % 3 - 1, 0, w - 1);
        const T f0 = flow[ny * w + nx], f1 = flow[hw + ny * w + nx];
        for (int64_t s = 0; s < 64; ++s) {
          const int64_t o = (8 * y + s / 8) * ow + 8 * x + s % 8;
          dmask[(k * 64 + s) * hw + p] +=
              T(8) * (dout[o] * f0 + dout[oh * ow + o] * f1);
        }
      }
    }
  }
  // dflow: scatter with border clamp; cheap at coarse resolution, kept serial
  if (dflow) {
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x)
        for (int64_t k = 0; k < 9; ++k) {
          const int64_t ny = std::clamp<int64_t>(y + k / 3 - 1, 0, h - 1);
          const int64_t nx = std::clamp<int64_t>(x + k % 3 - 1, 0, w - 1);
          T acc0 = 0, acc1 = 0;
          for (int64_t s = 0; s < 64; ++s) {
            const T m = mask[(k * 64 + s) * hw + y * w + x];
            const int64_t o = (8 * y + s / 8) * ow + 8 * x + s % 8;
            acc0 += m * dout[o];
            acc1 += m * dout[oh * ow + o];
          }
          dflow[ny * w + nx] += T(8) * acc0;
          dflow[hw + ny * w + nx] += T(8) * acc1;
        }
  }
}

}  // namespace neuflow::kernels
