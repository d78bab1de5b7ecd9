#pragma once

// Differentiable operations over Tensor<T>. Forward values are computed by
// the kernels in neuflow::kernels; each op registers a closure that routes
// the output gradient back to its parents.

#include <cmath>
#include <cstdio>
#include <vector>

#include "neuflow/core/tensor.hpp"
#include "neuflow/kernels/conv2d.hpp"
#include "neuflow/kernels/correlation.hpp"
#include "neuflow/kernels/gemm.hpp"
#include "neuflow/kernels/image.hpp"
#include "neuflow/kernels/upsample.hpp"

namespace neuflow::ops {

template <class T>
using Node = typename Tensor<T>::Node;

// ---------------------------------------------------------------- elementwise

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  NF_CHECK(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) +
                                       " vs " + shape_str(b.shape()));
  std::vector<T> v(a.value());
  const T* pb = b.data();
  for (size_t i = 0; i < v.size(); ++i) v[i] += pb[i];
  auto *an = a.node().get(), *bn = b.node().get();
  return Tensor<T>::make(a.shape(), std::move(v), {a, b}, [an, bn](Node<T>& s) {
    if (an->requires_grad)
      for (size_t i = 0; i < s.grad.size(); ++i) an->grad[i] += s.grad[i];
    if (bn->requires_grad)
      for (size_t i = 0; i < s.grad.size(); ++i) bn->grad[i] += s.grad[i];
  });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  NF_CHECK(a.shape() == b.shape(), "sub: shape mismatch");
  std::vector<T> v(a.value());
  const T* pb = b.data();
  for (size_t i = 0; i < v.size(); ++i) v[i] -= pb[i];
  auto *an = a.node().get(), *bn = b.node().get();
  return Tensor<T>::make(a.shape(), std::move(v), {a, b}, [an, bn](Node<T>& s) {
    if (an->requires_grad)
      for (size_t i = 0; i < s.grad.size(); ++i) an->grad[i] += s.grad[i];
    if (bn->requires_grad)
      for (size_t i = 0; i < s.grad.size(); ++i) bn->grad[i] -= s.grad[i];
  });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  NF_CHECK(a.shape() == b.shape(), "mul: shape mismatch");
  std::vector<T> v(a.value());
  const T* pb = b.data();
  for (size_t i = 0; i < v.size(); ++i) v[i] *= pb[i];
  auto *an = a.node().get(), *bn = b.node().get();
  return Tensor<T>::make(a.shape(), std::move(v), {a, b}, [an, bn](Node<T>& s) {
    if (an->requires_grad)
      for (size_t i = 0; i < s.grad.size(); ++i) an->grad[i] += s.grad[i] * bn->value[i];
    if (bn->requires_grad)
      for (size_t i = 0; i < s.grad.size(); ++i) bn->grad[i] += s.grad[i] * an->value[i];
  });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  std::vector<T> v(a.value());
  for (auto& e : v) e *= c;
  auto* an = a.node().get();
  return Tensor<T>::make(a.shape(), std::move(v), {a}, [an, c](Node<T>& s) {
    if (an->requires_grad)
      for (size_t i = 0; i < s.grad.size(); ++i) an->grad[i] += c * s.grad[i];
  });
}

// c - x, elementwise
template <class T>
Tensor<T> rsub_scalar(T c, const Tensor<T>& a) {
  std::vector<T> v(a.value());
  for (auto& e : v) e = c - e;
  auto* an = a.node().get();
  return Tensor<T>::make(a.shape(), std::move(v), {a}, [an](Node<T>& s) {
    if (an->requires_grad)
      for (size_t i = 0; i < s.grad.size(); ++i) an->grad[i] -= s.grad[i];
  });
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> v(x.value());
  for (auto& e : v) e = e > T(0) ? e : T(0);
  auto* xn = x.node().get();
  return Tensor<T>::make(x.shape(), std::move(v), {x}, [xn](Node<T>& s) {
    if (!xn->requires_grad) return;
    for (size_t i = 0; i < s.grad.size(); ++i)
      if (s.value[i] > T(0)) xn->grad[i] += s.grad[i];
  });
}

// HardTanh saturation: identity on (lo, hi), constant outside; gradient 1
// strictly inside the bounds, 0 outside.
template <class T>
Tensor<T> hardtanh(const Tensor<T>& x, T lo = T(-4), T hi = T(4)) {
  std::vector<T> v(x.value());
  for (auto& e : v) e = std::min(std::max(e, lo), hi);
  auto* xn = x.node().get();
  return Tensor<T>::make(x.shape(), std::move(v), {x}, [xn, lo, hi](Node<T>& s) {
    if (!xn->requires_grad) return;
    for (size_t i = 0; i < s.grad.size(); ++i)
      if (xn->value[i] > lo && xn->value[i] < hi) xn->grad[i] += s.grad[i];
  });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> v(x.value());
  for (auto& e : v) e = T(1) / (T(1) + std::exp(-e));
  auto* xn = x.node().get();
  return Tensor<T>::make(x.shape(), std::move(v), {x}, [xn](Node<T>& s) {
    if (!xn->requires_grad) return;
    for (size_t i = 0; i < s.grad.size(); ++i)
      xn->grad[i] += s.grad[i] * s.value[i] * (T(1) - s.value[i]);
  });
}

template <class T>
Tensor<T> tanh_op(const Tensor<T>& x) {
  std::vector<T> v(x.value());
  for (auto& e : v) e = std::tanh(e);
  auto* xn = x.node().get();
  return Tensor<T>::make(x.shape(), std::move(v), {x}, [xn](Node<T>& s) {
    if (!xn->requires_grad) return;
    for (size_t i = 0; i < s.grad.size(); ++i)
      xn->grad[i] += s.grad[i] * (T(1) - s.value[i] * s.value[i]);
  });
}

template <class T>
Tensor<T> detach(const Tensor<T>& x) {
  return x.detach();
}

// ---------------------------------------------------------------- reductions

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = 0;
  for (T v : x.value()) s += v;
  auto* xn = x.node().get();
  return Tensor<T>::make({1}, {s}, {x}, [xn](Node<T>& self) {
    if (!xn->requires_grad) return;
    const T g = self.grad[0];
    for (auto& e : xn->grad) e += g;
  });
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
  const T n = static_cast<T>(x.size());
  T s = 0;
  for (T v : x.value()) s += v;
  auto* xn = x.node().get();
  return Tensor<T>::make({1}, {s / n}, {x}, [xn, n](Node<T>& self) {
    if (!xn->requires_grad) return;
    const T g = self.grad[0] / n;
    for (auto& e : xn->grad) e += g;
  });
}

// ---------------------------------------------------------------- shape ops

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape s) {
  NF_CHECK(numel(s) == x.size(), "reshape: numel mismatch");
  auto* xn = x.node().get();
  return Tensor<T>::make(std::move(s), std::vector<T>(x.value()), {x},
                         [xn](Node<T>& self) {
                           if (!xn->requires_grad) return;
                           for (size_t i = 0; i < self.grad.size(); ++i)
                             xn->grad[i] += self.grad[i];
                         });
}

template <class T>
Tensor<T> concat_ch(const std::vector<Tensor<T>>& xs) {
  NF_CHECK(!xs.empty(), "concat_ch: empty input");
  const int64_t h = xs[0].shape()[1], w = xs[0].shape()[2];
  int64_t ctot = 0;
  for (const auto& x : xs) {
    NF_CHECK(x.shape().size() == 3 && x.shape()[1] == h && x.shape()[2] == w,
             "concat_ch: spatial dims mismatch");
    ctot += x.shape()[0];
  }
  std::vector<T> v(static_cast<size_t>(ctot * h * w));
  int64_t off = 0;
  std::vector<int64_t> offsets;
  for (const auto& x : xs) {
    offsets.push_back(off);
    std::copy(x.value().begin(), x.value().end(), v.begin() + off);
    off += x.size();
  }
  std::vector<typename Tensor<T>::Node*> ns;
  for (const auto& x : xs) ns.push_back(x.node().get());
  return Tensor<T>::make({ctot, h, w}, std::move(v), xs,
                         [ns, offsets](Node<T>& self) {
                           for (size_t j = 0; j < ns.size(); ++j) {
                             if (!ns[j]->requires_grad) continue;
                             const size_t n = ns[j]->value.size();
                             const T* g = self.grad.data() + offsets[j];
                             for (size_t i = 0; i < n; ++i) ns[j]->grad[i] += g[i];
                           }
                         });
}

template <class T>
Tensor<T> slice_ch(const Tensor<T>& x, int64_t start, int64_t count) {
  NF_CHECK(x.shape().size() == 3, "slice_ch: expects CHW");
  const int64_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  NF_CHECK(start >= 0 && start + count <= c, "slice_ch: range out of bounds");
  std::vector<T> v(x.value().begin() + start * h * w,
                   x.value().begin() + (start + count) * h * w);
  auto* xn = x.node().get();
  const int64_t off = start * h * w;
  return Tensor<T>::make({count, h, w}, std::move(v), {x}, [xn, off](Node<T>& s) {
    if (!xn->requires_grad) return;
    for (size_t i = 0; i < s.grad.size(); ++i) xn->grad[off + i] += s.grad[i];
  });
}

// CHW feature map -> (HW x C) token matrix and back.
template <class T>
Tensor<T> chw_to_tokens(const Tensor<T>& x) {
  NF_CHECK(x.shape().size() == 3, "chw_to_tokens: expects CHW");
  const int64_t c = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
  std::vector<T> v(static_cast<size_t>(c * hw));
  kernels::transpose(c, hw, x.data(), v.data());
  auto* xn = x.node().get();
  return Tensor<T>::make({hw, c}, std::move(v), {x}, [xn, c, hw](Node<T>& s) {
    if (!xn->requires_grad) return;
    for (int64_t p = 0; p < hw; ++p)
      for (int64_t ch = 0; ch < c; ++ch) xn->grad[ch * hw + p] += s.grad[p * c + ch];
  });
}

template <class T>
Tensor<T> tokens_to_chw(const Tensor<T>& x, int64_t h, int64_t w) {
  NF_CHECK(x.shape().size() == 2 && x.shape()[0] == h * w, "tokens_to_chw: bad shape");
  const int64_t c = x.shape()[1], hw = h * w;
  std::vector<T> v(static_cast<size_t>(c * hw));
  kernels::transpose(hw, c, x.data(), v.data());
  auto* xn = x.node().get();
  return Tensor<T>::make({c, h, w}, std::move(v), {x}, [xn, c, hw](Node<T>& s) {
    if (!xn->requires_grad) return;
    for (int64_t ch = 0; ch < c; ++ch)
      for (int64_t p = 0; p < hw; ++p) xn->grad[p * c + ch] += s.grad[ch * hw + p];
  });
}

template <class T>
Tensor<T> slice_cols(const Tensor<T>& x, int64_t start, int64_t count) {
  NF_CHECK(x.shape().size() == 2, "slice_cols: expects matrix");
  const int64_t m = x.shape()[0], n = x.shape()[1];
  NF_CHECK(start >= 0 && start + count <= n, "slice_cols: range out of bounds");
  std::vector<T> v(static_cast<size_t>(m * count));
  for (int64_t i = 0; i < m; ++i)
    std::copy(x.data() + i * n + start, x.data() + i * n + start + count,
              v.begin() + i * count);
  auto* xn = x.node().get();
  return Tensor<T>::make({m, count}, std::move(v), {x},
                         [xn, m, n, start, count](Node<T>& s) {
                           if (!xn->requires_grad) return;
                           for (int64_t i = 0; i < m; ++i)
                             for (int64_t j = 0; j < count; ++j)
                               xn->grad[i * n + start + j] += s.grad[i * count + j];
                         });
}

template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& xs) {
  NF_CHECK(!xs.empty(), "concat_cols: empty input");
  const int64_t m = xs[0].shape()[0];
  int64_t ntot = 0;
  for (const auto& x : xs) {
    NF_CHECK(x.shape().size() == 2 && x.shape()[0] == m, "concat_cols: row mismatch");
    ntot += x.shape()[1];
  }
  std::vector<T> v(static_cast<size_t>(m * ntot));
  std::vector<int64_t> offs;
  int64_t off = 0;
  for (const auto& x : xs) {
    offs.push_back(off);
    const int64_t n = x.shape()[1];
    for (int64_t i = 0; i < m; ++i)
      std::copy(x.data() + i * n, x.data() + (i + 1) * n, v.begin() + i * ntot + off);
    off += n;
  }
  std::vector<typename Tensor<T>::Node*> ns;
  std::vector<int64_t> widths;
  for (const auto& x : xs) {
    ns.push_back(x.node().get());
    widths.push_back(x.shape()[1]);
  }
  return Tensor<T>::make({m, ntot}, std::move(v), xs,
                         [ns, offs, widths, m, ntot](Node<T>& self) {
                           for (size_t j = 0; j < ns.size(); ++j) {
                             if (!ns[j]->requires_grad) continue;
                             for (int64_t i = 0; i < m; ++i)
                               for (int64_t k = 0; k < widths[j]; ++k)
                                 ns[j]->grad[i * widths[j] + k] +=
                                     self.grad[i * ntot + offs[j] + k];
                           }
                         });
}

// ---------------------------------------------------------------- matrix ops

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  NF_CHECK(a.shape().size() == 2 && b.shape().size() == 2 && a.shape()[1] == b.shape()[0],
           "matmul: incompatible shapes");
  const int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<T> v(static_cast<size_t>(m * n));
  kernels::gemm_nn(m, k, n, a.data(), b.data(), v.data());
  auto *an = a.node().get(), *bn = b.node().get();
  return Tensor<T>::make({m, n}, std::move(v), {a, b}, [an, bn, m, k, n](Node<T>& s) {
    if (an->requires_grad)
      kernels::gemm_nt(m, n, k, s.grad.data(), bn->value.data(), an->grad.data(), true);
    if (bn->requires_grad) {
      std::vector<T> at(static_cast<size_t>(k * m));
      kernels::transpose(m, k, an->value.data(), at.data());
      kernels::gemm_nn(k, m, n, at.data(), s.grad.data(), bn->grad.data(), true);
    }
  });
}

// a (MxK) * b(NxK)^T
template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  NF_CHECK(a.shape().size() == 2 && b.shape().size() == 2 && a.shape()[1] == b.shape()[1],
           "matmul_nt: incompatible shapes");
  const int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  std::vector<T> v(static_cast<size_t>(m * n));
  kernels::gemm_nt(m, k, n, a.data(), b.data(), v.data());
  auto *an = a.node().get(), *bn = b.node().get();
  return Tensor<T>::make({m, n}, std::move(v), {a, b}, [an, bn, m, k, n](Node<T>& s) {
    if (an->requires_grad)
      kernels::gemm_nn(m, n, k, s.grad.data(), bn->value.data(), an->grad.data(), true);
    if (bn->requires_grad) {
      std::vector<T> gt(static_cast<size_t>(n * m));
      kernels::transpose(m, n, s.grad.data(), gt.data());
      kernels::gemm_nn(n, m, k, gt.data(), an->value.data(), bn->grad.data(), true);
    }
  });
}

template <class T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& b) {
  NF_CHECK(x.shape().size() == 2 && b.shape().size() == 1 && x.shape()[1] == b.shape()[0],
           "add_row_bias: shape mismatch");
  const int64_t m = x.shape()[0], n = x.shape()[1];
  std::vector<T> v(x.value());
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) v[i * n + j] += b.data()[j];
  auto *xn = x.node().get(), *bn = b.node().get();
  return Tensor<T>::make({m, n}, std::move(v), {x, b}, [xn, bn, m, n](Node<T>& s) {
    if (xn->requires_grad)
      for (size_t i = 0; i < s.grad.size(); ++i) xn->grad[i] += s.grad[i];
    if (bn->requires_grad)
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) bn->grad[j] += s.grad[i * n + j];
  });
}

// Row-wise softmax with max subtraction.
template <class T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  NF_CHECK(x.shape().size() == 2, "softmax_rows: expects matrix");
  const int64_t m = x.shape()[0], n = x.shape()[1];
  std::vector<T> v(x.value());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    T* row = v.data() + i * n;
    T mx = row[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    T s = 0;
    for (int64_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      s += row[j];
    }
    const T inv = T(1) / s;
    for (int64_t j = 0; j < n; ++j) row[j] *= inv;
  }
  auto* xn = x.node().get();
  return Tensor<T>::make({m, n}, std::move(v), {x}, [xn, m, n](Node<T>& s) {
    if (!xn->requires_grad) return;
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < m; ++i) {
      const T* y = s.value.data() + i * n;
      const T* g = s.grad.data() + i * n;
      T dot = 0;
      for (int64_t j = 0; j < n; ++j) dot += y[j] * g[j];
      for (int64_t j = 0; j < n; ++j) xn->grad[i * n + j] += y[j] * (g[j] - dot);
    }
  });
}

// Softmax across G channel groups: channels = G*S, entries g*S+s compete
// over g for each fixed (s, y, x). Used for the 9-way upsampling mask.
template <class T>
Tensor<T> softmax_groups_ch(const Tensor<T>& x, int64_t groups) {
  NF_CHECK(x.shape().size() == 3 && x.shape()[0] % groups == 0,
           "softmax_groups_ch: channels not divisible by groups");
  const int64_t S = x.shape()[0] / groups, hw = x.shape()[1] * x.shape()[2];
  std::vector<T> v(x.value());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < S * hw; ++i) {
    const int64_t s = i / hw, p = i % hw;
    T mx = v[(0 * S + s) * hw + p];
    for (int64_t g = 1; g < groups; ++g) mx = std::max(mx, v[(g * S + s) * hw + p]);
    T sum = 0;
    for (int64_t g = 0; g < groups; ++g) {
      T& e = v[(g * S + s) * hw + p];
      e = std::exp(e - mx);
      sum += e;
    }
    for (int64_t g = 0; g < groups; ++g) v[(g * S + s) * hw + p] /= sum;
  }
  auto* xn = x.node().get();
  return Tensor<T>::make(x.shape(), std::move(v), {x}, [xn, S, hw, groups](Node<T>& sf) {
    if (!xn->requires_grad) return;
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < S * hw; ++i) {
      const int64_t s = i / hw, p = i % hw;
      T dot = 0;
      for (int64_t g = 0; g < groups; ++g)
        dot += sf.value[(g * S + s) * hw + p] * sf.grad[(g * S + s) * hw + p];
      for (int64_t g = 0; g < groups; ++g) {
        const int64_t idx = (g * S + s) * hw + p;
        xn->grad[idx] += sf.value[idx] * (sf.grad[idx] - dot);
      }
    }
  });
}

// ---------------------------------------------------------------- conv & norm

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int64_t stride, int64_t pad) {
  NF_CHECK(x.shape().size() == 3 && w.shape().size() == 4, "conv2d: bad ranks");
  NF_CHECK(x.shape()[0] == w.shape()[1], "conv2d: channel mismatch " +
                                             shape_str(x.shape()) + " vs " +
                                             shape_str(w.shape()));
  kernels::Conv2dDims d{x.shape()[0], x.shape()[1], x.shape()[2],
                        w.shape()[0], w.shape()[2], w.shape()[3], stride, pad};
  std::vector<T> v(static_cast<size_t>(d.c_out * d.out_h() * d.out_w()));
  kernels::conv2d_forward(d, x.data(), w.data(), b.defined() ? b.data() : nullptr,
                          v.data());
  auto *xn = x.node().get(), *wn = w.node().get();
  auto* bn = b.defined() ? b.node().get() : nullptr;
  std::vector<Tensor<T>> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return Tensor<T>::make({d.c_out, d.out_h(), d.out_w()}, std::move(v),
                         std::move(parents), [xn, wn, bn, d](Node<T>& s) {
                           kernels::conv2d_backward(
                               d, xn->value.data(), wn->value.data(), s.grad.data(),
                               xn->requires_grad ? xn->grad.data() : nullptr,
                               wn->requires_grad ? wn->grad.data() : nullptr,
                               bn && bn->requires_grad ? bn->grad.data() : nullptr);
                         });
}

// Channel-group normalization (batch independent). gamma/beta are per
// channel; statistics are computed per group over (C/G, H, W).
template <class T>
Tensor<T> group_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, int64_t groups, T eps = T(1e-5)) {
  NF_CHECK(x.shape().size() == 3, "group_norm: expects CHW");
  const int64_t c = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
  NF_CHECK(c % groups == 0, "group_norm: channels not divisible by groups");
  NF_CHECK(gamma.shape() == Shape{c} && beta.shape() == Shape{c},
           "group_norm: affine shape mismatch");
  const int64_t cg = c / groups, n = cg * hw;

  std::vector<T> xhat(static_cast<size_t>(c * hw));
  std::vector<T> invstd(static_cast<size_t>(groups));
  std::vector<T> v(static_cast<size_t>(c * hw));
#pragma omp parallel for schedule(static)
  for (int64_t g = 0; g < groups; ++g) {
    const T* xp = x.data() + g * n;
    double mu = 0;
    for (int64_t i = 0; i < n; ++i) mu += xp[i];
    mu /= n;
    double var = 0;
    for (int64_t i = 0; i < n; ++i) {
      const double d = xp[i] - mu;
      var += d * d;
    }
    var /= n;
    const T is = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
    invstd[g] = is;
    for (int64_t i = 0; i < n; ++i) {
      const int64_t ch = g * cg + i / hw;
      const T xh = (xp[i] - static_cast<T>(mu)) * is;
      xhat[g * n + i] = xh;
      v[g * n + i] = xh * gamma.data()[ch] + beta.data()[ch];
    }
  }
  auto *xn = x.node().get(), *gn = gamma.node().get(), *bn = beta.node().get();
  return Tensor<T>::make(
      x.shape(), std::move(v), {x, gamma, beta},
      [xn, gn, bn, xhat = std::move(xhat), invstd = std::move(invstd), groups, cg,
       hw](Node<T>& s) {
        const int64_t n = cg * hw;
        if (gn->requires_grad || bn->requires_grad) {
          for (int64_t ch = 0; ch < groups * cg; ++ch) {
            T dg = 0, db = 0;
            for (int64_t i = 0; i < hw; ++i) {
              dg += s.grad[ch * hw + i] * xhat[ch * hw + i];
              db += s.grad[ch * hw + i];
            }
            if (gn->requires_grad) gn->grad[ch] += dg;
            if (bn->requires_grad) bn->grad[ch] += db;
          }
        }
        if (!xn->requires_grad) return;
#pragma omp parallel for schedule(static)
        for (int64_t g = 0; g < groups; ++g) {
          // dxhat = dy * gamma; dx = invstd*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
          double m1 = 0, m2 = 0;
          for (int64_t i = 0; i < n; ++i) {
            const int64_t ch = g * cg + i / hw;
            const double dxh = static_cast<double>(s.grad[g * n + i]) * gn->value[ch];
            m1 += dxh;
            m2 += dxh * xhat[g * n + i];
          }
          m1 /= n;
          m2 /= n;
          for (int64_t i = 0; i < n; ++i) {
            const int64_t ch = g * cg + i / hw;
            const double dxh = static_cast<double>(s.grad[g * n + i]) * gn->value[ch];
            xn->grad[g * n + i] +=
                static_cast<T>(invstd[g] * (dxh - m1 - xhat[g * n + i] * m2));
          }
        }
      });
}

// ---------------------------------------------------------------- image ops

template <class T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int64_t oh, int64_t ow) {
  NF_CHECK(x.shape().size() == 3, "bilinear_resize: expects CHW");
  const int64_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  std::vector<T> v(static_cast<size_t>(c * oh * ow));
  kernels::bilinear_resize(c, h, w, oh, ow, x.data(), v.data());
  auto* xn = x.node().get();
  return Tensor<T>::make({c, oh, ow}, std::move(v), {x},
                         [xn, c, h, w, oh, ow](Node<T>& s) {
                           if (!xn->requires_grad) return;
                           kernels::bilinear_resize_backward(c, h, w, oh, ow,
                                                             s.grad.data(),
                                                             xn->grad.data());
                         });
}

template <class T>
Tensor<T> area_down2(const Tensor<T>& x) {
  const int64_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  NF_CHECK(h % 2 == 0 && w % 2 == 0, "area_down2: dims must be even");
  std::vector<T> v(static_cast<size_t>(c * (h / 2) * (w / 2)));
  kernels::area_down2(c, h, w, x.data(), v.data());
  auto* xn = x.node().get();
  return Tensor<T>::make({c, h / 2, w / 2}, std::move(v), {x},
                         [xn, c, h, w](Node<T>& s) {
                           if (!xn->requires_grad) return;
                           kernels::area_down2_backward(c, h, w, s.grad.data(),
                                                        xn->grad.data());
                         });
}

template <class T>
Tensor<T> warp_zero(const Tensor<T>& x, const Tensor<T>& flow) {
  NF_CHECK(x.shape().size() == 3 && flow.shape().size() == 3 && flow.shape()[0] == 2 &&
               flow.shape()[1] == x.shape()[1] && flow.shape()[2] == x.shape()[2],
           "warp_zero: shape mismatch");
  const int64_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  std::vector<T> v(static_cast<size_t>(c * h * w));
  kernels::warp_zero(c, h, w, x.data(), flow.data(), v.data());
  auto *xn = x.node().get(), *fn = flow.node().get();
  return Tensor<T>::make({c, h, w}, std::move(v), {x, flow},
                         [xn, fn, c, h, w](Node<T>& s) {
                           kernels::warp_zero_backward(
                               c, h, w, xn->value.data(), fn->value.data(),
                               s.grad.data(),
                               xn->requires_grad ? xn->grad.data() : nullptr,
                               fn->requires_grad ? fn->grad.data() : nullptr);
                         });
}

template <class T>
Tensor<T> local_correlation(const Tensor<T>& f0, const Tensor<T>& f1, int64_t radius) {
  NF_CHECK(f0.shape() == f1.shape() && f0.shape().size() == 3,
           "local_correlation: shape mismatch " + shape_str(f0.shape()) + " vs " +
               shape_str(f1.shape()));
  const int64_t c = f0.shape()[0], h = f0.shape()[1], w = f0.shape()[2];
  const int64_t D = 2 * radius + 1;
  std::vector<T> v(static_cast<size_t>(D * D * h * w));
  kernels::local_correlation(c, h, w, radius, f0.data(), f1.data(), v.data());
  auto *an = f0.node().get(), *bn = f1.node().get();
  return Tensor<T>::make({D * D, h, w}, std::move(v), {f0, f1},
                         [an, bn, c, h, w, radius](Node<T>& s) {
                           kernels::local_correlation_backward(
                               c, h, w, radius, an->value.data(), bn->value.data(),
                               s.grad.data(),
                               an->requires_grad ? an->grad.data() : nullptr,
                               bn->requires_grad ? bn->grad.data() : nullptr);
                         });
}

template <class T>
Tensor<T> convex_upsample8(const Tensor<T>& flow, const Tensor<T>& mask) {
  NF_CHECK(flow.shape().size() == 3 && flow.shape()[0] == 2, "convex_upsample8: flow");
  const int64_t h = flow.shape()[1], w = flow.shape()[2];
  NF_CHECK(mask.shape() == Shape({576, h, w}), "convex_upsample8: mask shape");
  std::vector<T> v(static_cast<size_t>(2 * 64 * h * w));
  kernels::convex_upsample8(h, w, flow.data(), mask.data(), v.data());
  auto *fn = flow.node().get(), *mn = mask.node().get();
  return Tensor<T>::make({2, 8 * h, 8 * w}, std::move(v), {flow, mask},
                         [fn, mn, h, w](Node<T>& s) {
                           kernels::convex_upsample8_backward(
                               h, w, fn->value.data(), mn->value.data(), s.grad.data(),
                               fn->requires_grad ? fn->grad.data() : nullptr,
                               mn->requires_grad ? mn->grad.data() : nullptr);
                         });
}

// ---------------------------------------------------------------- losses

// Mean over valid pixels of |du| + |dv|. Empty mask contributes 0.
template <class T>
Tensor<T> masked_l1_mean(const Tensor<T>& pred, const Tensor<T>& gt,
                         const Tensor<T>& valid) {
  NF_CHECK(pred.shape() == gt.shape() && pred.shape().size() == 3 &&
               pred.shape()[0] == 2,
           "masked_l1_mean: flow shapes");
  const int64_t hw = pred.shape()[1] * pred.shape()[2];
  NF_CHECK(valid.size() == hw, "masked_l1_mean: mask size");
  double s = 0;
  int64_t n = 0;
  for (int64_t p = 0; p < hw; ++p) {
    if (valid.data()[p] == T(0)) continue;
    s += std::abs(static_cast<double>(pred.data()[p]) - gt.data()[p]) +
         std::abs(static_cast<double>(pred.data()[hw + p]) - gt.data()[hw + p]);
    ++n;
  }
  if (n == 0) {
    std::fprintf(stderr, "neuflow: warning: empty valid mask in loss, contributing 0\n");
    s = 0;
  }
  const T inv = n ? T(1) / static_cast<T>(n) : T(0);
  auto *pn = pred.node().get(), *gn = gt.node().get(), *vn = valid.node().get();
  return Tensor<T>::make(
      {1}, {static_cast<T>(s) * inv}, {pred, gt, valid}, [pn, gn, vn, hw, inv](Node<T>& sf) {
        if (!pn->requires_grad) return;
        const T g = sf.grad[0] * inv;
        for (int64_t p = 0; p < hw; ++p) {
          if (vn->value[p] == T(0)) continue;
          for (int64_t ch = 0; ch < 2; ++ch) {
            const T d = pn->value[ch * hw + p] - gn->value[ch * hw + p];
            if (d > T(0))
              pn->grad[ch * hw + p] += g;
            else if (d < T(0))
              pn->grad[ch * hw + p] -= g;
          }
        }
      });
}

}  // namespace neuflow::ops
