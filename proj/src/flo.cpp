#include "neuflow/dataio/flo.hpp"

#include "neuflow/dataio/png_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace neuflow {

namespace {
constexpr float kFloMagic = 202021.25f;
constexpr int64_t kMaxDim = 1 << 20;

[[noreturn]] void flo_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("flo: " + what + ": " + path);
}
}  // namespace

void write_flo(const FlowField& flow, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) flo_fail(path, "cannot open for writing");
  const int32_t w = static_cast<int32_t>(flow.w), h = static_cast<int32_t>(flow.h);
  f.write(reinterpret_cast<const char*>(&kFloMagic), 4);
  f.write(reinterpret_cast<const char*>(&w), 4);
  f.write(reinterpret_cast<const char*>(&h), 4);
  std::vector<float> row(static_cast<size_t>(2 * w));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      row[2 * x] = flow.u(y, x);
      row[2 * x + 1] = flow.v(y, x);
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(8 * w));
  }
  if (!f) flo_fail(path, "write failed");
}

FlowField read_flo(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) flo_fail(path, "cannot open");
  const int64_t file_size = static_cast<int64_t>(f.tellg());
  f.seekg(0);
  if (file_size < 12) flo_fail(path, "truncated header");

  float magic = 0;
  int32_t w = 0, h = 0;
  f.read(reinterpret_cast<char*>(&magic), 4);
  f.read(reinterpret_cast<char*>(&w), 4);
  f.read(reinterpret_cast<char*>(&h), 4);
  if (magic != kFloMagic) flo_fail(path, "bad magic number");
  if (w <= 0 || h <= 0 || w > kMaxDim || h > kMaxDim) flo_fail(path, "dimension overflow");
  const int64_t expected = 12 + 8ll * w * h;
  if (file_size != expected)
    flo_fail(path, "payload size mismatch (expected " + std::to_string(expected) +
                       " bytes, file has " + std::to_string(file_size) + ")");

  FlowField flow{h, w, std::vector<float>(static_cast<size_t>(2 * w * h))};
  std::vector<float> row(static_cast<size_t>(2 * w));
  for (int64_t y = 0; y < h; ++y) {
    f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(8 * w));
    if (!f) flo_fail(path, "truncated payload");
    for (int64_t x = 0; x < w; ++x) {
      flow.u(y, x) = row[2 * x];
      flow.v(y, x) = row[2 * x + 1];
    }
  }
  return flow;
}

void write_kitti_png(const FlowField& flow, const std::vector<uint8_t>& valid,
                     const std::string& path) {
  const int64_t h = flow.h, w = flow.w;
  std::vector<uint16_t> rgb(static_cast<size_t>(h * w * 3));
  for (int64_t p = 0; p < h * w; ++p) {
    const double ue = std::lround(static_cast<double>(flow.uv[p]) * 64.0) + 32768.0;
    const double ve = std::lround(static_cast<double>(flow.uv[h * w + p]) * 64.0) + 32768.0;
    rgb[p * 3 + 0] = static_cast<uint16_t>(std::min(65535.0, std::max(0.0, ue)));
    rgb[p * 3 + 1] = static_cast<uint16_t>(std::min(65535.0, std::max(0.0, ve)));
    rgb[p * 3 + 2] = valid.empty() || valid[p] ? 1 : 0;
  }
  write_png16(path, h, w, rgb);
}

std::pair<FlowField, std::vector<uint8_t>> read_kitti_png(const std::string& path) {
  int64_t h = 0, w = 0;
  const auto rgb = read_png16(path, &h, &w);
  FlowField flow{h, w, std::vector<float>(static_cast<size_t>(2 * h * w))};
  std::vector<uint8_t> valid(static_cast<size_t>(h * w));
  for (int64_t p = 0; p < h * w; ++p) {
    flow.uv[p] = (static_cast<float>(rgb[p * 3 + 0]) - 32768.0f) / 64.0f;
    flow.uv[h * w + p] = (static_cast<float>(rgb[p * 3 + 1]) - 32768.0f) / 64.0f;
    valid[p] = rgb[p * 3 + 2] > 0 ? 1 : 0;
  }
  return {std::move(flow), std::move(valid)};
}

}  // namespace neuflow
