#pragma once

// Full pipeline: backbone -> cross-attention -> global match -> 1/16
// refinement -> upsample -> multi-scale merge -> 1/8 refinement -> convex
// upsample. Every intermediate flow is recorded at full resolution for
// sequence supervision; the last entry is the convex-upsampled output.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "neuflow/backbone.hpp"
#include "neuflow/config.hpp"
#include "neuflow/fusion.hpp"
#include "neuflow/matching.hpp"
#include "neuflow/refinement.hpp"

namespace neuflow {

struct ForwardOptions {
  int64_t iters16 = -1;  // -1: use config
  int64_t iters8 = -1;
  bool record_sequence = true;
  // During training the flow fed back into warp/refine is detached, RAFT
  // style; predictions themselves stay supervised.
  bool detach_flow = true;
  // Convex-upsample after every 1/8 iteration (per-iteration evaluation).
  bool per_iteration_output = false;
  // Staged-training aid: cut the graph between the matching trunk
  // (backbone + attention) and the refinement consumers, so refinement
  // noise cannot reach the trunk while the global-matching loss keeps
  // training it. No effect on forward values.
  bool detach_features = false;
};

template <class T>
struct ForwardResult {
  std::vector<Tensor<T>> preds;      // full-res flows, 1 + iters16 + iters8
  Tensor<T> final_flow;              // == preds.back()
  std::vector<Tensor<T>> per_iter8;  // per-1/8-iteration convex-upsampled flows
};

template <class T>
struct NeuFlow {
  ModelConfig cfg;
  Backbone<T> backbone;
  CrossAttention<T> attn;
  RefineBlock<T> refine16, refine8;
  MergeBlock<T> merge_feat, merge_ctx;
  MaskHead<T> mask_head;

  void init(const ModelConfig& c, uint64_t seed) {
    c.validate();
    cfg = c;
    auto rng = make_rng(seed);
    const int64_t corr_ch = (2 * cfg.corr_radius + 1) * (2 * cfg.corr_radius + 1);
    backbone.init(rng, cfg);
    attn.init(rng, cfg.dim16, cfg.attention);
    refine16.init(rng, cfg.refine, cfg.dim16, cfg.dim16, corr_ch);
    refine8.init(rng, cfg.refine, cfg.dim8, cfg.dim8, corr_ch);
    merge_feat.init(rng, cfg.dim8, cfg.dim16);
    merge_ctx.init(rng, cfg.dim8, cfg.dim16);
    mask_head.init(rng, cfg.dim8);
  }

  ParamMap<T> params() {
    ParamMap<T> m;
    backbone.register_params(m, "backbone");
    attn.register_params(m, "attn");
    refine16.register_params(m, "refine16");
    refine8.register_params(m, "refine8");
    merge_feat.register_params(m, "merge_feat");
    merge_ctx.register_params(m, "merge_ctx");
    mask_head.register_params(m, "mask_head");
    return m;
  }

  ForwardResult<T> forward(const Tensor<T>& img1, const Tensor<T>& img2,
                           const ForwardOptions& opt = {}) const {
    NF_CHECK(img1.shape() == img2.shape(),
             "forward: image dims differ: " + shape_str(img1.shape()) + " vs " +
                 shape_str(img2.shape()));
    const int64_t full_h = img1.shape()[1], full_w = img1.shape()[2];
    NF_CHECK(full_h % 16 == 0 && full_w % 16 == 0,
             "forward: dims must be multiples of 16, got " + shape_str(img1.shape()));
    const int64_t iters16 = opt.iters16 >= 0 ? opt.iters16 : cfg.iters16;
    const int64_t iters8 = opt.iters8 >= 1 ? opt.iters8 : cfg.iters8;
    NF_CHECK(iters8 >= 1, "forward: iters8 must be >= 1");

    ForwardResult<T> out;
    auto record = [&](const Tensor<T>& coarse_flow) {
      if (opt.record_sequence)
        out.preds.push_back(upsample_flow_to_full(coarse_flow, full_h, full_w));
    };
    auto maybe_detach = [&](const Tensor<T>& t) {
      return opt.detach_flow ? t.detach() : t;
    };

    ensure_finite(img1, "input");
    ensure_finite(img2, "input");
    auto pf1 = backbone.forward(img1);
    auto pf2 = backbone.forward(img2);
    ensure_finite(pf1.feat16, "backbone");

    auto [ef16_1, ef16_2] = attn.forward(pf1.feat16, pf2.feat16);
    ensure_finite(ef16_1, "cross_attention");

    auto flow16 = global_match(ef16_1, ef16_2);
    ensure_finite(flow16, "global_match");
    record(flow16);

    if (opt.detach_features) {
      ef16_1 = ef16_1.detach();
      ef16_2 = ef16_2.detach();
      pf1.feat8 = pf1.feat8.detach();
      pf2.feat8 = pf2.feat8.detach();
      pf1.ctx8 = pf1.ctx8.detach();
      pf1.ctx16 = pf1.ctx16.detach();
      pf1.upfeat8 = pf1.upfeat8.detach();
    }

    if (iters16 > 0) {
      auto vol16 = ops::local_correlation(ef16_1, ef16_2, cfg.corr_radius);
      auto h16 = refine16.initial_hidden(flow16.shape()[1], flow16.shape()[2]);
      for (int64_t i = 0; i < iters16; ++i) {
        auto fin = maybe_detach(flow16);
        auto corr_w = ops::warp_zero(vol16, fin);
        auto [nf, nh] = refine16.step(corr_w, fin, pf1.ctx16, h16);
        flow16 = nf;
        h16 = nh;
        ensure_finite(flow16, "refine16");
        record(flow16);
      }
    }

    auto flow8 = upsample_flow_2x(flow16);

    auto mf1 = merge_feat(pf1.feat8, ef16_1);
    auto mf2 = merge_feat(pf2.feat8, ef16_2);
    auto mc1 = merge_ctx(pf1.ctx8, pf1.ctx16);
    ensure_finite(mf1, "merge_multiscale");

    auto vol8 = ops::local_correlation(mf1, mf2, cfg.corr_radius);
    auto h8 = refine8.initial_hidden(flow8.shape()[1], flow8.shape()[2]);
    for (int64_t i = 0; i < iters8; ++i) {
      auto fin = maybe_detach(flow8);
      auto corr_w = ops::warp_zero(vol8, fin);
      auto [nf, nh] = refine8.step(corr_w, fin, mc1, h8);
      flow8 = nf;
      h8 = nh;
      ensure_finite(flow8, "refine8");
      if (opt.record_sequence && i + 1 < iters8) record(flow8);
      if (opt.per_iteration_output) {
        auto mask_i = mask_head(pf1.upfeat8, h8);
        out.per_iter8.push_back(ops::convex_upsample8(flow8, mask_i));
      }
    }

    auto mask = mask_head(pf1.upfeat8, h8);
    out.final_flow = ops::convex_upsample8(flow8, mask);
    ensure_finite(out.final_flow, "convex_upsample");
    if (opt.record_sequence) out.preds.push_back(out.final_flow);
    return out;
  }
};

// Exponentially weighted L1 sequence loss over valid pixels. Ground-truth
// flows larger than max_flow are excluded from supervision.
template <class T>
Tensor<T> sequence_loss(const std::vector<Tensor<T>>& preds, const Tensor<T>& gt,
                        const Tensor<T>& valid, T gamma = T(0.8),
                        T max_flow = T(400)) {
  NF_CHECK(!preds.empty(), "sequence_loss: empty prediction sequence");
  NF_CHECK(gt.shape().size() == 3 && gt.shape()[0] == 2, "sequence_loss: gt shape");
  const int64_t hw = gt.shape()[1] * gt.shape()[2];
  NF_CHECK(valid.size() == hw, "sequence_loss: valid mask size");

  std::vector<T> vm(valid.value());
  for (int64_t p = 0; p < hw; ++p) {
    const double u = gt.data()[p], v = gt.data()[hw + p];
    if (std::sqrt(u * u + v * v) > static_cast<double>(max_flow)) vm[p] = T(0);
  }
  auto mask = Tensor<T>::from_data({gt.shape()[1], gt.shape()[2]}, std::move(vm));

  const int64_t n = static_cast<int64_t>(preds.size());
  Tensor<T> total;
  for (int64_t i = 0; i < n; ++i) {
    const T w = static_cast<T>(std::pow(static_cast<double>(gamma),
                                        static_cast<double>(n - 1 - i)));
    auto term = ops::scale(ops::masked_l1_mean(preds[i], gt, mask), w);
    total = i == 0 ? term : ops::add(total, term);
  }
  return total;
}

}  // namespace neuflow
