#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "neuflow/core/rng.hpp"
#include "neuflow/ops.hpp"

namespace neuflow {

// Ordered name -> tensor registry. Insertion order is the normative layout
// used by the optimizer and the checkpoint container.
template <class T>
struct ParamMap {
  std::vector<std::pair<std::string, Tensor<T>>> items;

  void add(const std::string& name, const Tensor<T>& t) {
    items.emplace_back(name, t);
  }
  Tensor<T>* find(const std::string& name) {
    for (auto& [n, t] : items)
      if (n == name) return &t;
    return nullptr;
  }
  size_t size() const { return items.size(); }
};

template <class T>
struct Conv2dLayer {
  Tensor<T> w, b;
  int64_t stride = 1, pad = 1;

  void init(Rng& rng, int64_t c_in, int64_t c_out, int64_t k, int64_t stride_,
            T weight_scale = T(1)) {
    stride = stride_;
    pad = (k - 1) / 2;
    const T std_ = weight_scale * static_cast<T>(std::sqrt(2.0 / (c_in * k * k)));
    w = Tensor<T>::from_data({c_out, c_in, k, k},
                             randn_vec<T>(rng, static_cast<size_t>(c_out * c_in * k * k), std_),
                             true);
    b = Tensor<T>::from_data({c_out}, std::vector<T>(c_out, T(0)), true);
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    return ops::conv2d(x, w, b, stride, pad);
  }

  void register_params(ParamMap<T>& m, const std::string& prefix) {
    m.add(prefix + ".weight", w);
    m.add(prefix + ".bias", b);
  }
};

template <class T>
struct GroupNormLayer {
  Tensor<T> gamma, beta;
  int64_t groups = 1;

  void init(int64_t channels, int64_t channels_per_group = 8) {
    NF_CHECK(channels % channels_per_group == 0,
             "group norm channels must be a multiple of " +
                 std::to_string(channels_per_group));
    groups = channels / channels_per_group;
    gamma = Tensor<T>::from_data({channels}, std::vector<T>(channels, T(1)), true);
    beta = Tensor<T>::from_data({channels}, std::vector<T>(channels, T(0)), true);
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    return ops::group_norm(x, gamma, beta, groups);
  }

  void register_params(ParamMap<T>& m, const std::string& prefix) {
    m.add(prefix + ".gamma", gamma);
    m.add(prefix + ".beta", beta);
  }
};

// Two [conv 3x3, group norm, relu] units; the first unit carries the stride.
template <class T>
struct CnnBlock {
  Conv2dLayer<T> conv1, conv2;
  GroupNormLayer<T> norm1, norm2;

  void init(Rng& rng, int64_t c_in, int64_t c_out, int64_t stride) {
    conv1.init(rng, c_in, c_out, 3, stride);
    norm1.init(c_out);
    conv2.init(rng, c_out, c_out, 3, 1);
    norm2.init(c_out);
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    auto y = ops::relu(norm1(conv1(x)));
    return ops::relu(norm2(conv2(y)));
  }

  void register_params(ParamMap<T>& m, const std::string& prefix) {
    conv1.register_params(m, prefix + ".conv1");
    norm1.register_params(m, prefix + ".norm1");
    conv2.register_params(m, prefix + ".conv2");
    norm2.register_params(m, prefix + ".norm2");
  }
};

template <class T>
struct Linear {
  Tensor<T> w, b;

  void init(Rng& rng, int64_t in, int64_t out, T weight_scale = T(1)) {
    const T std_ = weight_scale * static_cast<T>(std::sqrt(2.0 / in));
    w = Tensor<T>::from_data({in, out}, randn_vec<T>(rng, static_cast<size_t>(in * out), std_),
                             true);
    b = Tensor<T>::from_data({out}, std::vector<T>(out, T(0)), true);
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    return ops::add_row_bias(ops::matmul(x, w), b);
  }

  void register_params(ParamMap<T>& m, const std::string& prefix) {
    m.add(prefix + ".weight", w);
    m.add(prefix + ".bias", b);
  }
};

}  // namespace neuflow
