#pragma once

// Cross-attention feature enhancement and global matching at 1/16 scale.
// Attention weights are shared between the two directions, so swapping the
// inputs swaps the outputs.

#include <cmath>
#include <utility>
#include <vector>

#include "neuflow/config.hpp"
#include "neuflow/nn.hpp"

namespace neuflow {

// Fixed 2-D sinusoidal positional encoding as an (HW x C) token matrix.
// Channels interleave (sin x, cos x, sin y, cos y) across C/4 frequencies.
template <class T>
Tensor<T> positional_encoding_tokens(int64_t h, int64_t w, int64_t c) {
  NF_CHECK(c % 4 == 0, "positional encoding requires channels divisible by 4");
  const int64_t nf = c / 4;
  std::vector<T> v(static_cast<size_t>(h * w * c));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      T* row = v.data() + (y * w + x) * c;
      for (int64_t i = 0; i < nf; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / nf);
        row[4 * i + 0] = static_cast<T>(std::sin(x * freq));
        row[4 * i + 1] = static_cast<T>(std::cos(x * freq));
        row[4 * i + 2] = static_cast<T>(std::sin(y * freq));
        row[4 * i + 3] = static_cast<T>(std::cos(y * freq));
      }
    }
  return Tensor<T>::from_data({h * w, c}, std::move(v));
}

// Pixel-coordinate token matrix (x, y), used by global matching.
template <class T>
Tensor<T> coordinate_tokens(int64_t h, int64_t w) {
  std::vector<T> v(static_cast<size_t>(h * w * 2));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      v[(y * w + x) * 2 + 0] = static_cast<T>(x);
      v[(y * w + x) * 2 + 1] = static_cast<T>(y);
    }
  return Tensor<T>::from_data({h * w, 2}, std::move(v));
}

template <class T>
struct CrossAttentionLayer {
  Linear<T> proj_q, proj_k, proj_v, proj_o;
  Linear<T> ff1, ff2;

  void init(Rng& rng, int64_t dim) {
    proj_q.init(rng, dim, dim);
    proj_k.init(rng, dim, dim);
    proj_v.init(rng, dim, dim);
    proj_o.init(rng, dim, dim, T(0.25));  // keep the residual stream tame at init
    ff1.init(rng, dim, 2 * dim);
    ff2.init(rng, 2 * dim, dim, T(0.25));
  }

  void register_params(ParamMap<T>& m, const std::string& prefix) {
    proj_q.register_params(m, prefix + ".q");
    proj_k.register_params(m, prefix + ".k");
    proj_v.register_params(m, prefix + ".v");
    proj_o.register_params(m, prefix + ".o");
    ff1.register_params(m, prefix + ".ff1");
    ff2.register_params(m, prefix + ".ff2");
  }
};

template <class T>
struct CrossAttention {
  AttentionConfig cfg;
  int64_t dim = 128;
  std::vector<CrossAttentionLayer<T>> layers;

  void init(Rng& rng, int64_t dim_, const AttentionConfig& c) {
    cfg = c;
    dim = dim_;
    layers.resize(static_cast<size_t>(cfg.num_layers));
    for (auto& l : layers) l.init(rng, dim);
  }

  // One direction: tokens x attend to tokens y.
  Tensor<T> attend(const CrossAttentionLayer<T>& l, const Tensor<T>& x,
                   const Tensor<T>& y, const Tensor<T>& pe) const {
    auto qin = cfg.use_positional_encoding ? ops::add(x, pe) : x;
    auto kin = cfg.use_positional_encoding ? ops::add(y, pe) : y;
    auto q = l.proj_q(qin);
    auto k = l.proj_k(kin);
    auto v = l.proj_v(y);

    const int64_t dh = dim / cfg.num_heads;
    const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    std::vector<Tensor<T>> heads;
    for (int64_t hh = 0; hh < cfg.num_heads; ++hh) {
      auto qh = ops::slice_cols(q, hh * dh, dh);
      auto kh = ops::slice_cols(k, hh * dh, dh);
      auto vh = ops::slice_cols(v, hh * dh, dh);
      auto attnw = ops::softmax_rows(ops::scale(ops::matmul_nt(qh, kh), inv_sqrt));
      heads.push_back(ops::matmul(attnw, vh));
    }
    auto ctx = cfg.num_heads == 1 ? heads[0] : ops::concat_cols(heads);
    auto res = ops::add(x, l.proj_o(ctx));
    auto ff = l.ff2(ops::relu(l.ff1(res)));
    return ops::add(res, ff);
  }

  std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& f0,
                                          const Tensor<T>& f1) const {
    NF_CHECK(f0.shape() == f1.shape(),
             "cross_attention: shape mismatch " + shape_str(f0.shape()) + " vs " +
                 shape_str(f1.shape()));
    const int64_t h = f0.shape()[1], w = f0.shape()[2];
    auto t0 = ops::chw_to_tokens(f0);
    auto t1 = ops::chw_to_tokens(f1);
    auto pe = positional_encoding_tokens<T>(h, w, dim);
    for (const auto& l : layers) {
      auto n0 = attend(l, t0, t1, pe);
      auto n1 = attend(l, t1, t0, pe);
      t0 = n0;
      t1 = n1;
    }
    return {ops::tokens_to_chw(t0, h, w), ops::tokens_to_chw(t1, h, w)};
  }

  void register_params(ParamMap<T>& m, const std::string& prefix) {
    for (size_t i = 0; i < layers.size(); ++i)
      layers[i].register_params(m, prefix + ".layer" + std::to_string(i));
  }
};

// All-pairs matching: softmax over scaled dot-product similarities, flow is
// the probability-weighted expected displacement. Uniform features resolve
// to the grid centroid, never NaN.
template <class T>
Tensor<T> global_match(const Tensor<T>& f0, const Tensor<T>& f1) {
  NF_CHECK(f0.shape() == f1.shape() && f0.shape().size() == 3,
           "global_match: shape mismatch");
  const int64_t c = f0.shape()[0], h = f0.shape()[1], w = f0.shape()[2];
  auto t0 = ops::chw_to_tokens(f0);
  auto t1 = ops::chw_to_tokens(f1);
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(c)));
  auto prob = ops::softmax_rows(ops::scale(ops::matmul_nt(t0, t1), inv_sqrt));
  auto coords = coordinate_tokens<T>(h, w);
  auto expected = ops::matmul(prob, coords);
  return ops::tokens_to_chw(ops::sub(expected, coords), h, w);
}

}  // namespace neuflow
