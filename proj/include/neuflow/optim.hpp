#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "neuflow/nn.hpp"

namespace neuflow {

// Adam with decoupled weight decay.
template <class T>
struct AdamW {
  T beta1 = T(0.9), beta2 = T(0.999), eps = T(1e-8);
  T weight_decay = T(1e-4);
  int64_t step_count = 0;
  std::vector<std::vector<T>> m, v;

  void init(const ParamMap<T>& params) {
    m.clear();
    v.clear();
    for (const auto& [name, t] : params.items) {
      m.emplace_back(t.value().size(), T(0));
      v.emplace_back(t.value().size(), T(0));
    }
    step_count = 0;
  }

  void step(ParamMap<T>& params, T lr) {
    ++step_count;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1), step_count));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2), step_count));
    for (size_t i = 0; i < params.items.size(); ++i) {
      auto& t = params.items[i].second;
      if (t.grad().empty()) continue;
      auto& val = t.value();
      const auto& g = t.grad();
      auto& mi = m[i];
      auto& vi = v[i];
      for (size_t j = 0; j < val.size(); ++j) {
        mi[j] = beta1 * mi[j] + (T(1) - beta1) * g[j];
        vi[j] = beta2 * vi[j] + (T(1) - beta2) * g[j] * g[j];
        const T mhat = mi[j] / bc1;
        const T vhat = vi[j] / bc2;
        val[j] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * val[j]);
      }
    }
  }

  void zero_grad(ParamMap<T>& params) {
    for (auto& [name, t] : params.items)
      if (!t.grad().empty()) t.zero_grad();
  }
};

// Global L2 gradient clipping; returns the pre-clip norm.
template <class T>
T clip_grad_norm(ParamMap<T>& params, T max_norm) {
  double sq = 0;
  for (const auto& [name, t] : params.items)
    for (T g : t.grad()) sq += static_cast<double>(g) * g;
  const T norm = static_cast<T>(std::sqrt(sq));
  if (norm > max_norm && norm > T(0)) {
    const T s = max_norm / norm;
    for (auto& [name, t] : params.items)
      for (auto& g : t.grad_mut()) g *= s;
  }
  return norm;
}

// One-cycle schedule: linear warmup to the peak over the first fraction of
// training, then linear anneal toward peak/final_div.
struct OneCycleSchedule {
  double peak_lr = 4e-4;
  int64_t total_steps = 1000;
  double pct_start = 0.05;
  double div_factor = 25.0;
  double final_div = 1e4;

  double lr(int64_t step) const {
    const double start = peak_lr / div_factor;
    const double end = start / final_div;
    const double warm = pct_start * total_steps;
    if (step < warm) return start + (peak_lr - start) * (step / warm);
    const double t = (step - warm) / std::max(1.0, total_steps - warm);
    return peak_lr + (end - peak_lr) * std::min(1.0, t);
  }
};

}  // namespace neuflow
