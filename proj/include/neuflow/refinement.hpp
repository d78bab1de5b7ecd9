#pragma once

// Gate-free recurrent refinement: a stack of 3x3 conv+ReLU layers over the
// concatenated [warped correlation, flow, context, hidden state]. The final
// layer predicts the refined flow directly plus the hidden-state
// pre-activation, which is saturated to [-4, 4]. A ConvGRU variant exists
// for the ablation comparison.

#include <utility>
#include <vector>

#include "neuflow/config.hpp"
#include "neuflow/nn.hpp"

namespace neuflow {

template <class T>
Tensor<T> hard_clamp(const Tensor<T>& x, T lo = T(-4), T hi = T(4)) {
  return ops::hardtanh(x, lo, hi);
}

// Bilinear 2x spatial upsampling; displacement values double with the
// resolution change.
template <class T>
Tensor<T> upsample_flow_2x(const Tensor<T>& flow) {
  NF_CHECK(flow.shape().size() == 3 && flow.shape()[0] == 2, "upsample_flow_2x: flow");
  const int64_t h = flow.shape()[1], w = flow.shape()[2];
  return ops::scale(ops::bilinear_resize(flow, 2 * h, 2 * w), T(2));
}

// Bilinear upsample a coarse flow to full resolution for supervision.
template <class T>
Tensor<T> upsample_flow_to_full(const Tensor<T>& flow, int64_t full_h, int64_t full_w) {
  const T factor = static_cast<T>(full_h) / static_cast<T>(flow.shape()[1]);
  return ops::scale(ops::bilinear_resize(flow, full_h, full_w), factor);
}

template <class T>
struct RefineBlock {
  RefineConfig cfg;
  int64_t hidden_dim = 128, ctx_dim = 128, corr_channels = 81;

  std::vector<Conv2dLayer<T>> convs;            // gate-free stack / GRU decode stack
  Conv2dLayer<T> conv_z, conv_r, conv_h;        // conv_gru gates

  void init(Rng& rng, const RefineConfig& c, int64_t hidden, int64_t ctx,
            int64_t corr_ch) {
    cfg = c;
    hidden_dim = hidden;
    ctx_dim = ctx;
    corr_channels = corr_ch;
    const int64_t n = cfg.num_conv_layers;
    convs.resize(static_cast<size_t>(n));
    if (cfg.variant == "gate_free") {
      const int64_t c_in = corr_channels + 2 + ctx_dim + hidden_dim;
      convs[0].init(rng, c_in, hidden_dim, 3, 1);
      for (int64_t i = 1; i < n - 1; ++i) convs[i].init(rng, hidden_dim, hidden_dim, 3, 1);
      convs[n - 1].init(rng, hidden_dim, hidden_dim + 2, 3, 1, T(0.1));
    } else {
      const int64_t x_ch = corr_channels + 2 + ctx_dim;
      conv_z.init(rng, hidden_dim + x_ch, hidden_dim, 3, 1);
      conv_r.init(rng, hidden_dim + x_ch, hidden_dim, 3, 1);
      conv_h.init(rng, hidden_dim + x_ch, hidden_dim, 3, 1);
      convs[0] = {};  // layer 1 is the GRU cell
      for (int64_t i = 1; i < n - 1; ++i) convs[i].init(rng, hidden_dim, hidden_dim, 3, 1);
      convs[n - 1].init(rng, hidden_dim, 2, 3, 1, T(0.1));
    }
  }

  Tensor<T> initial_hidden(int64_t h, int64_t w) const {
    return Tensor<T>::zeros({hidden_dim, h, w});
  }

  std::pair<Tensor<T>, Tensor<T>> step(const Tensor<T>& corr_warped,
                                       const Tensor<T>& flow, const Tensor<T>& ctx,
                                       const Tensor<T>& hidden) const {
    if (cfg.variant == "gate_free") return gate_free_step(corr_warped, flow, ctx, hidden);
    return gru_step(corr_warped, flow, ctx, hidden);
  }

  std::pair<Tensor<T>, Tensor<T>> gate_free_step(const Tensor<T>& corr_warped,
                                                 const Tensor<T>& flow,
                                                 const Tensor<T>& ctx,
                                                 const Tensor<T>& hidden) const {
    auto x = ops::concat_ch<T>({corr_warped, flow, ctx, hidden});
    const int64_t n = cfg.num_conv_layers;
    for (int64_t i = 0; i < n - 1; ++i) x = ops::relu(convs[i](x));
    auto y = convs[n - 1](x);
    auto new_flow = ops::slice_ch(y, 0, 2);
    if (cfg.residual_flow) new_flow = ops::add(flow, new_flow);
    auto new_hidden = hard_clamp(ops::slice_ch(y, 2, hidden_dim));
    return {new_flow, new_hidden};
  }

  // Ablation variant: layer 1 is a ConvGRU cell producing the hidden state;
  // the remaining layers decode the flow from it.
  std::pair<Tensor<T>, Tensor<T>> gru_step(const Tensor<T>& corr_warped,
                                           const Tensor<T>& flow, const Tensor<T>& ctx,
                                           const Tensor<T>& hidden) const {
    auto x = ops::concat_ch<T>({corr_warped, flow, ctx});
    auto hx = ops::concat_ch<T>({hidden, x});
    auto z = ops::sigmoid(conv_z(hx));
    auto r = ops::sigmoid(conv_r(hx));
    auto cand = ops::tanh_op(conv_h(ops::concat_ch<T>({ops::mul(r, hidden), x})));
    auto new_hidden =
        ops::add(ops::mul(ops::rsub_scalar(T(1), z), hidden), ops::mul(z, cand));
    auto d = new_hidden;
    const int64_t n = cfg.num_conv_layers;
    for (int64_t i = 1; i < n - 1; ++i) d = ops::relu(convs[i](d));
    auto new_flow = convs[n - 1](d);
    if (cfg.residual_flow) new_flow = ops::add(flow, new_flow);
    return {new_flow, new_hidden};
  }

  void register_params(ParamMap<T>& m, const std::string& prefix) {
    if (cfg.variant == "conv_gru") {
      conv_z.register_params(m, prefix + ".gru_z");
      conv_r.register_params(m, prefix + ".gru_r");
      conv_h.register_params(m, prefix + ".gru_h");
      for (size_t i = 1; i < convs.size(); ++i)
        convs[i].register_params(m, prefix + ".conv" + std::to_string(i));
    } else {
      for (size_t i = 0; i < convs.size(); ++i)
        convs[i].register_params(m, prefix + ".conv" + std::to_string(i));
    }
  }
};

}  // namespace neuflow
