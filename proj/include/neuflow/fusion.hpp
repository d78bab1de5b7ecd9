#pragma once

// Multi-scale merge (1/16 global context into 1/8 local features) and the
// convex-upsampling mask head. Features and context each get their own
// merge weights; the structure is shared.

#include "neuflow/config.hpp"
#include "neuflow/nn.hpp"

namespace neuflow {

template <class T>
struct MergeBlock {
  CnnBlock<T> block;

  void init(Rng& rng, int64_t dim8, int64_t dim16) {
    block.init(rng, dim8 + dim16, dim8, 1);
  }

  Tensor<T> operator()(const Tensor<T>& x8, const Tensor<T>& x16) const {
    const int64_t h = x8.shape()[1], w = x8.shape()[2];
    NF_CHECK(x16.shape()[1] * 2 == h && x16.shape()[2] * 2 == w,
             "merge_multiscale: " + shape_str(x16.shape()) + " does not upsample to " +
                 shape_str(x8.shape()));
    auto up = ops::bilinear_resize(x16, h, w);
    return block(ops::concat_ch<T>({x8, up}));
  }

  void register_params(ParamMap<T>& m, const std::string& prefix) {
    block.register_params(m, prefix + ".block");
  }
};

template <class T>
struct MaskHead {
  CnnBlock<T> block;
  Conv2dLayer<T> proj;  // 1x1 -> 9*64 tap weights

  void init(Rng& rng, int64_t dim8) {
    block.init(rng, 2 * dim8, dim8, 1);
    proj.init(rng, dim8, 576, 1, 1, T(0.25));
  }

  // Softmax-normalized mask: 9 taps compete per (sub-pixel, coarse pixel).
  Tensor<T> operator()(const Tensor<T>& upfeat8, const Tensor<T>& hidden) const {
    auto y = block(ops::concat_ch<T>({upfeat8, hidden}));
    return ops::softmax_groups_ch(proj(y), 9);
  }

  void register_params(ParamMap<T>& m, const std::string& prefix) {
    block.register_params(m, prefix + ".block");
    proj.register_params(m, prefix + ".proj");
  }
};

}  // namespace neuflow
