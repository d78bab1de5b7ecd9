#include "neuflow/dataio/flow_color.hpp"

#include <cmath>

namespace neuflow {

const std::vector<std::array<uint8_t, 3>>& middlebury_color_wheel() {
  static const std::vector<std::array<uint8_t, 3>> wheel = [] {
    const int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    std::vector<std::array<uint8_t, 3>> w;
    auto push = [&](int r, int g, int b) {
      w.push_back({static_cast<uint8_t>(r), static_cast<uint8_t>(g), static_cast<uint8_t>(b)});
    };
    for (int i = 0; i < RY; ++i) push(255, 255 * i / RY, 0);
    for (int i = 0; i < YG; ++i) push(255 - 255 * i / YG, 255, 0);
    for (int i = 0; i < GC; ++i) push(0, 255, 255 * i / GC);
    for (int i = 0; i < CB; ++i) push(0, 255 - 255 * i / CB, 255);
    for (int i = 0; i < BM; ++i) push(255 * i / BM, 0, 255);
    for (int i = 0; i < MR; ++i) push(255, 0, 255 - 255 * i / MR);
    return w;
  }();
  return wheel;
}

std::array<uint8_t, 3> flow_vector_color(float u, float v, float max_mag) {
  const auto& wheel = middlebury_color_wheel();
  const int ncols = static_cast<int>(wheel.size());
  const double rad = std::min(1.0, std::sqrt(static_cast<double>(u) * u +
                                             static_cast<double>(v) * v) /
                                       std::max(1e-9f, max_mag));
  const double a = std::atan2(-static_cast<double>(v), -static_cast<double>(u)) / M_PI;
  const double fk = (a + 1.0) / 2.0 * (ncols - 1);
  const int k0 = static_cast<int>(std::floor(fk));
  const int k1 = (k0 + 1) % ncols;
  const double f = fk - k0;
  std::array<uint8_t, 3> out;
  for (int ch = 0; ch < 3; ++ch) {
    double col = ((1.0 - f) * wheel[k0][ch] + f * wheel[k1][ch]) / 255.0;
    col = 1.0 - rad * (1.0 - col);  // blend toward white at zero magnitude
    out[ch] = static_cast<uint8_t>(std::lround(255.0 * col));
  }
  return out;
}

ImageU8 flow_to_color(const FlowField& flow, float max_mag) {
  if (max_mag <= 0.f) {
    double mx = 0;
    for (int64_t p = 0; p < flow.h * flow.w; ++p) {
      const double u = flow.uv[p], v = flow.uv[flow.h * flow.w + p];
      mx = std::max(mx, std::sqrt(u * u + v * v));
    }
    max_mag = static_cast<float>(std::max(1e-9, mx));
  }
  ImageU8 out{flow.h, flow.w,
              std::vector<uint8_t>(static_cast<size_t>(flow.h * flow.w * 3))};
#pragma omp parallel for schedule(static)
  for (int64_t p = 0; p < flow.h * flow.w; ++p) {
    const auto c =
        flow_vector_color(flow.uv[p], flow.uv[flow.h * flow.w + p], max_mag);
    out.rgb[p * 3 + 0] = c[0];
    out.rgb[p * 3 + 1] = c[1];
    out.rgb[p * 3 + 2] = c[2];
  }
  return out;
}

}  // namespace neuflow
