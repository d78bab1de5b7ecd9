#pragma once

// Shallow multi-scale feature extractor. Low-level features come from the
// 1/2, 1/4, 1/8 pyramid images only; the full-resolution image feeds a
// separate branch that serves nothing but the convex-upsampling features,
// so zeroing it cannot change the matching or context outputs.

#include <vector>

#include "neuflow/config.hpp"
#include "neuflow/nn.hpp"

namespace neuflow {

template <class T>
struct PyramidFeatures {
  Tensor<T> feat8, ctx8;    // 1/8 scale, dim8 channels
  Tensor<T> feat16, ctx16;  // 1/16 scale, dim16 channels
  Tensor<T> upfeat8;        // 1/8 scale, dim8 channels, upsampling branch
};

// Scales 1/1, 1/2, 1/4, 1/8 by repeated 2x area averaging.
template <class T>
std::vector<Tensor<T>> build_pyramid(const Tensor<T>& img) {
  NF_CHECK(img.shape().size() == 3, "build_pyramid: expects CHW image");
  const int64_t h = img.shape()[1], w = img.shape()[2];
  NF_CHECK(h >= 32 && w >= 32, "build_pyramid: image smaller than 32x32");
  NF_CHECK(h % 16 == 0 && w % 16 == 0,
           "build_pyramid: dims must be multiples of 16, got " + shape_str(img.shape()));
  std::vector<Tensor<T>> pyr{img};
  for (int i = 0; i < 3; ++i) pyr.push_back(ops::area_down2(pyr.back()));
  return pyr;
}

template <class T>
struct Backbone {
  int64_t lowlevel = 64, full_dim = 32, dim8 = 96, dim16 = 128;

  CnnBlock<T> enc_half;      // 1/2 image -> 1/4 features (stride 2)
  CnnBlock<T> enc_quarter;   // 1/4 image -> 1/4 features
  CnnBlock<T> enc_eighth;    // 1/8 image -> 1/8 features
  CnnBlock<T> down_quarter;  // fused 1/4 -> 1/8 (stride 2)
  CnnBlock<T> feat8_head, ctx8_head;    // trunk -> 1/8 outputs
  CnnBlock<T> feat16_head, ctx16_head;  // trunk -> 1/16 outputs (stride 2)

  CnnBlock<T> enc_full;     // 1/1 image -> 1/2 (stride 2), upsampling branch only
  CnnBlock<T> up_half;      // 1/2 -> 1/4 (stride 2)
  CnnBlock<T> up_quarter;   // 1/4 -> 1/8 (stride 2)
  CnnBlock<T> upfeat_head;  // concat(trunk, branch) -> upfeat8

  void init(Rng& rng, const ModelConfig& cfg) {
    lowlevel = cfg.lowlevel_dim;
    full_dim = std::max<int64_t>(8, lowlevel / 2);
    dim8 = cfg.dim8;
    dim16 = cfg.dim16;
    enc_half.init(rng, 3, lowlevel, 2);
    enc_quarter.init(rng, 3, lowlevel, 1);
    enc_eighth.init(rng, 3, lowlevel, 1);
    down_quarter.init(rng, 2 * lowlevel, lowlevel, 2);
    feat8_head.init(rng, 2 * lowlevel, dim8, 1);
    ctx8_head.init(rng, 2 * lowlevel, dim8, 1);
    feat16_head.init(rng, 2 * lowlevel, dim16, 2);
    ctx16_head.init(rng, 2 * lowlevel, dim16, 2);
    enc_full.init(rng, 3, full_dim, 2);
    up_half.init(rng, full_dim, lowlevel, 2);
    up_quarter.init(rng, lowlevel, lowlevel, 2);
    upfeat_head.init(rng, 3 * lowlevel, dim8, 1);
  }

  PyramidFeatures<T> forward_from_pyramid(const std::vector<Tensor<T>>& pyr) const {
    NF_CHECK(pyr.size() == 4, "backbone: expects a 4-level pyramid");
    auto e2 = enc_half(pyr[1]);
    auto e4 = enc_quarter(pyr[2]);
    auto e8 = enc_eighth(pyr[3]);
    auto d4 = down_quarter(ops::concat_ch<T>({e2, e4}));
    auto trunk = ops::concat_ch<T>({d4, e8});

    PyramidFeatures<T> out;
    out.feat8 = feat8_head(trunk);
    out.ctx8 = ctx8_head(trunk);
    out.feat16 = feat16_head(trunk);
    out.ctx16 = ctx16_head(trunk);

    auto u = up_quarter(up_half(enc_full(pyr[0])));
    out.upfeat8 = upfeat_head(ops::concat_ch<T>({trunk, u}));
    return out;
  }

  PyramidFeatures<T> forward(const Tensor<T>& img) const {
    return forward_from_pyramid(build_pyramid(img));
  }

  void register_params(ParamMap<T>& m, const std::string& prefix) {
    enc_half.register_params(m, prefix + ".enc_half");
    enc_quarter.register_params(m, prefix + ".enc_quarter");
    enc_eighth.register_params(m, prefix + ".enc_eighth");
    down_quarter.register_params(m, prefix + ".down_quarter");
    feat8_head.register_params(m, prefix + ".feat8_head");
    ctx8_head.register_params(m, prefix + ".ctx8_head");
    feat16_head.register_params(m, prefix + ".feat16_head");
    ctx16_head.register_params(m, prefix + ".ctx16_head");
    enc_full.register_params(m, prefix + ".enc_full");
    up_half.register_params(m, prefix + ".up_half");
    up_quarter.register_params(m, prefix + ".up_quarter");
    upfeat_head.register_params(m, prefix + ".upfeat_head");
  }
};

}  // namespace neuflow
