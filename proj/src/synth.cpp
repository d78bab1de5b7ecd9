#include "neuflow/dataio/synth.hpp"

#include <algorithm>
#include <cmath>

#include "neuflow/core/rng.hpp"
#include "neuflow/core/shape.hpp"

namespace neuflow {
namespace {

// Periodic value noise: a few octaves of bilinearly upsampled random grids.
// Wraps at the image border so layers can sample anywhere.
struct Texture {
  int64_t size = 0;
  std::vector<float> rgb;  // size*size*3, values in [0, 255]

  static Texture make(uint64_t seed, int64_t size) {
    Texture t;
    t.size = size;
    t.rgb.assign(static_cast<size_t>(size * size * 3), 0.f);
    Rng rng = make_rng(seed);
    const int64_t grids[4] = {std::max<int64_t>(2, size / 32),
                              std::max<int64_t>(2, size / 16),
                              std::max<int64_t>(4, size / 8),
                              std::max<int64_t>(4, size / 4)};
    const float weights[4] = {0.45f, 0.25f, 0.20f, 0.10f};
    for (int oct = 0; oct < 4; ++oct) {
      const int64_t g = grids[oct];
      auto vals = uniform_vec<float>(rng, static_cast<size_t>(g * g * 3), 0.f, 1.f);
      const double cell = static_cast<double>(size) / g;
      for (int64_t y = 0; y < size; ++y)
        for (int64_t x = 0; x < size; ++x) {
          const double gx = x / cell, gy = y / cell;
          const int64_t x0 = static_cast<int64_t>(gx) % g, y0 = static_cast<int64_t>(gy) % g;
          const int64_t x1 = (x0 + 1) % g, y1 = (y0 + 1) % g;
          const float fx = static_cast<float>(gx - std::floor(gx));
          const float fy = static_cast<float>(gy - std::floor(gy));
          for (int64_t ch = 0; ch < 3; ++ch) {
            const float v00 = vals[(y0 * g + x0) * 3 + ch];
            const float v10 = vals[(y0 * g + x1) * 3 + ch];
            const float v01 = vals[(y1 * g + x0) * 3 + ch];
            const float v11 = vals[(y1 * g + x1) * 3 + ch];
            const float v = (1 - fy) * ((1 - fx) * v00 + fx * v10) +
                            fy * ((1 - fx) * v01 + fx * v11);
            t.rgb[(y * size + x) * 3 + ch] += weights[oct] * v;
          }
        }
    }
    // stretch to a healthy contrast range
    for (auto& v : t.rgb) v = 20.f + 215.f * std::min(1.f, std::max(0.f, v));
    return t;
  }

  float sample(float x, float y, int64_t ch) const {
    // bilinear with wraparound
    const float fx = x - std::floor(x / size) * size;
    const float fy = y - std::floor(y / size) * size;
    const int64_t x0 = static_cast<int64_t>(fx) % size, y0 = static_cast<int64_t>(fy) % size;
    const int64_t x1 = (x0 + 1) % size, y1 = (y0 + 1) % size;
    const float wx = fx - std::floor(fx), wy = fy - std::floor(fy);
    return (1 - wy) * ((1 - wx) * rgb[(y0 * size + x0) * 3 + ch] +
                       wx * rgb[(y0 * size + x1) * 3 + ch]) +
           wy * ((1 - wx) * rgb[(y1 * size + x0) * 3 + ch] +
                 wx * rgb[(y1 * size + x1) * 3 + ch]);
  }
};

bool inside_shape(const LayerSpec& l, float x, float y) {
  switch (l.kind) {
    case LayerSpec::Kind::Background:
      return true;
    case LayerSpec::Kind::Ellipse: {
      const float dx = x - l.cx, dy = y - l.cy;
      const float cs = std::cos(l.phi), sn = std::sin(l.phi);
      const float ex = (cs * dx + sn * dy) / l.rx;
      const float ey = (-sn * dx + cs * dy) / l.ry;
      return ex * ex + ey * ey <= 1.f;
    }
    case LayerSpec::Kind::Polygon: {
      const auto& v = l.verts;
      for (size_t i = 0; i < v.size(); ++i) {
        const auto& p0 = v[i];
        const auto& p1 = v[(i + 1) % v.size()];
        const float cross = (p1[0] - p0[0]) * (y - p0[1]) - (p1[1] - p0[1]) * (x - p0[0]);
        if (cross < 0) return false;  // CCW polygon
      }
      return true;
    }
  }
  return false;
}

// Topmost layer covering (x, y) in image-1 coordinates.
int top_layer_img1(const std::vector<LayerSpec>& layers, float x, float y) {
  for (int k = static_cast<int>(layers.size()) - 1; k >= 0; --k)
    if (inside_shape(layers[k], x, y)) return k;
  return 0;
}

// Topmost layer covering (x, y) in image-2 coordinates (shape tested in its
// own image-1 frame through the inverse motion).
int top_layer_img2(const std::vector<LayerSpec>& layers,
                   const std::vector<Affine2x3>& inv, float x, float y) {
  for (int k = static_cast<int>(layers.size()) - 1; k >= 0; --k) {
    const auto p = inv[k].apply(x, y);
    if (inside_shape(layers[k], p[0], p[1])) return k;
  }
  return 0;
}

std::array<float, 2> convex_hull_point(Rng& rng, float cx, float cy, float rad) {
  std::uniform_real_distribution<float> ang(0.f, 2.f * static_cast<float>(M_PI));
  std::uniform_real_distribution<float> rd(0.35f * rad, rad);
  const float a = ang(rng), r = rd(rng);
  return {cx + r * std::cos(a), cy + r * std::sin(a)};
}

std::vector<std::array<float, 2>> convex_hull(std::vector<std::array<float, 2>> pts) {
  // Andrew's monotone chain, returns CCW hull (y grows downward, so the
  // cross-product sign convention below keeps inside_shape consistent).
  std::sort(pts.begin(), pts.end());
  auto cross = [](const std::array<float, 2>& o, const std::array<float, 2>& a,
                  const std::array<float, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<float, 2>> hull(2 * pts.size());
  size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  const size_t lower = k + 1;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  return hull;
}

Affine2x3 random_motion(Rng& rng, const SynthOptions& opt, float cx, float cy) {
  std::uniform_real_distribution<float> uang(0.f, 2.f * static_cast<float>(M_PI));
  std::uniform_real_distribution<float> umag(0.f, opt.max_disp);
  const float dir = uang(rng), mag = umag(rng);
  const float tx = mag * std::cos(dir), ty = mag * std::sin(dir);

  float m00 = 1, m01 = 0, m10 = 0, m11 = 1;
  if (!opt.pure_translation) {
    std::uniform_real_distribution<float> urot(-opt.max_rotation_deg, opt.max_rotation_deg);
    std::uniform_real_distribution<float> uscale(1.f - opt.scale_jitter, 1.f + opt.scale_jitter);
    std::uniform_real_distribution<float> ushear(-opt.max_shear, opt.max_shear);
    const float th = urot(rng) * static_cast<float>(M_PI) / 180.f;
    const float s = uscale(rng), sh = ushear(rng);
    const float cs = std::cos(th), sn = std::sin(th);
    // R * S * Shear
    m00 = s * cs;
    m01 = s * (cs * sh - sn);
    m10 = s * sn;
    m11 = s * (sn * sh + cs);
  }
  // rotate/scale about the layer center, then translate
  Affine2x3 A{m00, m01, 0, m10, m11, 0};
  A.tx = cx - (m00 * cx + m01 * cy) + tx;
  A.ty = cy - (m10 * cx + m11 * cy) + ty;
  return A;
}

}  // namespace

SynthSample render_scene(const std::vector<LayerSpec>& layers, int64_t size) {
  NF_CHECK(!layers.empty() && layers[0].kind == LayerSpec::Kind::Background,
           "render_scene: first layer must be the background");
  NF_CHECK(size % 16 == 0 && size >= 32, "render_scene: size must be a multiple of 16");
  const int64_t S = size;

  std::vector<Texture> tex;
  std::vector<Affine2x3> inv;
  for (const auto& l : layers) {
    tex.push_back(Texture::make(l.tex_seed, S));
    inv.push_back(l.motion.inverse());
  }

  SynthSample out;
  out.img1 = {S, S, std::vector<uint8_t>(static_cast<size_t>(S * S * 3))};
  out.img2 = {S, S, std::vector<uint8_t>(static_cast<size_t>(S * S * 3))};
  out.gt = {S, S, std::vector<float>(static_cast<size_t>(2 * S * S))};
  out.valid.assign(static_cast<size_t>(S * S), 0);
  for (const auto& l : layers) out.motion_params.push_back(l.motion);

  std::vector<int> layer2(static_cast<size_t>(S * S));
#pragma omp parallel for schedule(static)
  for (int64_t y = 0; y < S; ++y)
    for (int64_t x = 0; x < S; ++x) {
      const int k = top_layer_img2(layers, inv, static_cast<float>(x), static_cast<float>(y));
      layer2[y * S + x] = k;
      const auto p = inv[k].apply(static_cast<float>(x), static_cast<float>(y));
      for (int64_t ch = 0; ch < 3; ++ch)
        out.img2.rgb[(y * S + x) * 3 + ch] = static_cast<uint8_t>(
            std::min(255.f, std::max(0.f, tex[k].sample(p[0], p[1], ch))));
    }

#pragma omp parallel for schedule(static)
  for (int64_t y = 0; y < S; ++y)
    for (int64_t x = 0; x < S; ++x) {
      const int k = top_layer_img1(layers, static_cast<float>(x), static_cast<float>(y));
      for (int64_t ch = 0; ch < 3; ++ch)
        out.img1.rgb[(y * S + x) * 3 + ch] = static_cast<uint8_t>(std::min(
            255.f, std::max(0.f, tex[k].sample(static_cast<float>(x), static_cast<float>(y), ch))));
      const auto q = layers[k].motion.apply(static_cast<float>(x), static_cast<float>(y));
      out.gt.uv[y * S + x] = q[0] - x;
      out.gt.uv[S * S + y * S + x] = q[1] - y;
      const bool in_frame = q[0] >= 0.f && q[0] <= S - 1.f && q[1] >= 0.f && q[1] <= S - 1.f;
      if (in_frame) {
        const int64_t qx = static_cast<int64_t>(std::lround(q[0]));
        const int64_t qy = static_cast<int64_t>(std::lround(q[1]));
        if (layer2[qy * S + qx] == k) out.valid[y * S + x] = 1;
      }
    }
  return out;
}

SynthSample generate_sample(uint64_t seed, const SynthOptions& opt) {
  NF_CHECK(opt.size % 16 == 0 && opt.size >= 32,
           "generate_sample: size must be a multiple of 16 and >= 32");
  NF_CHECK(opt.max_disp < opt.size / 4.f,
           "generate_sample: max_disp must be below size/4");
  Rng rng = make_rng(seed * 0x9E3779B97F4A7C15ULL + 1);
  const float S = static_cast<float>(opt.size);

  std::vector<LayerSpec> layers;
  LayerSpec bg;
  bg.kind = LayerSpec::Kind::Background;
  bg.tex_seed = rng();
  bg.motion = random_motion(rng, opt, S / 2, S / 2);
  layers.push_back(bg);

  std::uniform_int_distribution<int64_t> nshapes(opt.min_shapes, opt.max_shapes);
  const int64_t n = nshapes(rng);
  std::uniform_real_distribution<float> uc(0.15f * S, 0.85f * S);
  std::uniform_real_distribution<float> ur(0.06f * S, 0.22f * S);
  std::uniform_real_distribution<float> uphi(0.f, 2.f * static_cast<float>(M_PI));
  std::uniform_int_distribution<int> ukind(0, 1);
  for (int64_t i = 0; i < n; ++i) {
    LayerSpec l;
    l.cx = uc(rng);
    l.cy = uc(rng);
    l.tex_seed = rng();
    if (ukind(rng) == 0) {
      l.kind = LayerSpec::Kind::Ellipse;
      l.rx = ur(rng);
      l.ry = ur(rng);
      l.phi = uphi(rng);
    } else {
      l.kind = LayerSpec::Kind::Polygon;
      const float rad = ur(rng);
      std::vector<std::array<float, 2>> pts;
      for (int j = 0; j < 8; ++j) pts.push_back(convex_hull_point(rng, l.cx, l.cy, rad));
      l.verts = convex_hull(std::move(pts));
      if (l.verts.size() < 3) {
        l.kind = LayerSpec::Kind::Ellipse;  // degenerate draw; fall back
        l.rx = l.ry = rad;
        l.phi = 0;
      }
    }
    l.motion = random_motion(rng, opt, l.cx, l.cy);
    layers.push_back(l);
  }
  return render_scene(layers, opt.size);
}

}  // namespace neuflow
