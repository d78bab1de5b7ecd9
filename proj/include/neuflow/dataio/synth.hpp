#pragma once

// Synthetic optical-flow scenes with analytically exact ground truth.
// A band-limited-noise background plus a few textured convex shapes, each
// under its own affine motion. gt comes straight from the affine of the
// topmost layer; the valid mask excludes pixels that leave the frame or get
// occluded in the second image.

#include <cstdint>
#include <optional>
#include <vector>

#include "neuflow/dataio/types.hpp"

namespace neuflow {

struct SynthOptions {
  int64_t size = 256;    // square, multiple of 16
  float max_disp = 32.f; // bound on the translation magnitude per layer
  int64_t min_shapes = 2, max_shapes = 6;
  float max_rotation_deg = 8.f;
  float scale_jitter = 0.05f;
  float max_shear = 0.05f;
  bool pure_translation = false;  // suppress rotation/scale/shear
};

struct LayerSpec {
  enum class Kind { Background, Ellipse, Polygon };
  Kind kind = Kind::Background;
  // ellipse: center, radii, orientation (radians)
  float cx = 0, cy = 0, rx = 0, ry = 0, phi = 0;
  // polygon: CCW convex vertices
  std::vector<std::array<float, 2>> verts;
  Affine2x3 motion;   // image1 coords -> image2 coords
  uint64_t tex_seed = 0;
};

// Deterministic rendering of an explicit scene (bottom layer first; the
// first layer must be a Background).
SynthSample render_scene(const std::vector<LayerSpec>& layers, int64_t size);

SynthSample generate_sample(uint64_t seed, const SynthOptions& opt);
inline SynthSample generate_sample(uint64_t seed, int64_t size, float max_disp) {
  SynthOptions opt;
  opt.size = size;
  opt.max_disp = max_disp;
  return generate_sample(seed, opt);
}

}  // namespace neuflow
