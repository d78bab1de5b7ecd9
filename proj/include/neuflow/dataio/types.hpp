#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "neuflow/core/tensor.hpp"

namespace neuflow {

// 8-bit RGB image, HWC interleaved (PNG-friendly layout).
struct ImageU8 {
  int64_t h = 0, w = 0;
  std::vector<uint8_t> rgb;  // h*w*3
};

// Dense flow field, u plane then v plane (CHW). Displacements are in pixels
// at the field's own resolution.
struct FlowField {
  int64_t h = 0, w = 0;
  std::vector<float> uv;  // 2*h*w

  float& u(int64_t y, int64_t x) { return uv[y * w + x]; }
  float& v(int64_t y, int64_t x) { return uv[h * w + y * w + x]; }
  float u(int64_t y, int64_t x) const { return uv[y * w + x]; }
  float v(int64_t y, int64_t x) const { return uv[h * w + y * w + x]; }
};

// Row-major 2x3 affine p -> M p + t with M = [[a,b],[c,d]], t = (tx,ty).
struct Affine2x3 {
  float a = 1, b = 0, tx = 0;
  float c = 0, d = 1, ty = 0;

  std::array<float, 2> apply(float x, float y) const {
    return {a * x + b * y + tx, c * x + d * y + ty};
  }
  Affine2x3 inverse() const {
    const float det = a * d - b * c;
    const float ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
    return {ia, ib, -(ia * tx + ib * ty), ic, id, -(ic * tx + id * ty)};
  }
};

struct SynthSample {
  ImageU8 img1, img2;
  FlowField gt;                       // full resolution, analytic
  std::vector<uint8_t> valid;         // h*w, 1 where gt is usable
  std::vector<Affine2x3> motion_params;  // per layer, bottom (background) first
};

// Images normalized to [-1, 1], CHW.
inline Tensor<float> image_to_tensor(const ImageU8& img, float brightness = 1.0f) {
  std::vector<float> v(static_cast<size_t>(3 * img.h * img.w));
  for (int64_t ch = 0; ch < 3; ++ch)
    for (int64_t p = 0; p < img.h * img.w; ++p) {
      float x = img.rgb[p * 3 + ch] / 255.0f * brightness;
      x = std::min(1.0f, std::max(0.0f, x));
      v[ch * img.h * img.w + p] = 2.0f * x - 1.0f;
    }
  return Tensor<float>::from_data({3, img.h, img.w}, std::move(v));
}

inline Tensor<float> flow_to_tensor(const FlowField& f) {
  return Tensor<float>::from_data({2, f.h, f.w}, f.uv);
}

inline FlowField tensor_to_flow(const Tensor<float>& t) {
  FlowField f;
  f.h = t.shape()[1];
  f.w = t.shape()[2];
  f.uv = t.value();
  return f;
}

inline Tensor<float> valid_to_tensor(const std::vector<uint8_t>& valid, int64_t h,
                                     int64_t w) {
  std::vector<float> v(valid.size());
  for (size_t i = 0; i < valid.size(); ++i) v[i] = valid[i] ? 1.0f : 0.0f;
  return Tensor<float>::from_data({h, w}, std::move(v));
}

// Edge-replication padding to multiples of 16 (right/bottom).
inline ImageU8 pad_to_multiple_of_16(const ImageU8& img) {
  const int64_t ph = (img.h + 15) / 16 * 16, pw = (img.w + 15) / 16 * 16;
  if (ph == img.h && pw == img.w) return img;
  ImageU8 out{ph, pw, std::vector<uint8_t>(static_cast<size_t>(ph * pw * 3))};
  for (int64_t y = 0; y < ph; ++y) {
    const int64_t sy = std::min(y, img.h - 1);
    for (int64_t x = 0; x < pw; ++x) {
      const int64_t sx = std::min(x, img.w - 1);
      for (int64_t ch = 0; ch < 3; ++ch)
        out.rgb[(y * pw + x) * 3 + ch] = img.rgb[(sy * img.w + sx) * 3 + ch];
    }
  }
  return out;
}

inline FlowField crop_flow(const FlowField& f, int64_t h, int64_t w) {
  FlowField out{h, w, std::vector<float>(static_cast<size_t>(2 * h * w))};
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      out.uv[y * w + x] = f.uv[y * f.w + x];
      out.uv[h * w + y * w + x] = f.uv[f.h * f.w + y * f.w + x];
    }
  return out;
}

}  // namespace neuflow
