#pragma once

// Central-difference verification of reverse-mode gradients. Meant for
// double precision and toy-sized fragments. Coordinates where both the
// analytic and numeric gradient vanish (e.g. fully clamp-saturated paths)
// contribute zero error; fragments should keep pre-activations away from
// the clamp kinks so no coordinate straddles one within eps.

#include <functional>
#include <vector>

#include "neuflow/core/tensor.hpp"

namespace neuflow {

struct GradCheckResult {
  double max_rel_err = 0;
  int64_t checked = 0;
};

// make_loss() must rebuild the graph from the current parameter values and
// return a scalar. rel error = |a - f| / max(|a|, |f|, floor).
template <class LossFn>
GradCheckResult finite_diff_check(const std::vector<Tensor<double>*>& params,
                                  LossFn&& make_loss, double eps = 1e-4,
                                  double floor = 1e-6) {
  // analytic pass
  for (auto* p : params) p->zero_grad();
  {
    Tensor<double> loss = make_loss();
    loss.backward();
  }
  std::vector<std::vector<double>> analytic;
  for (auto* p : params) analytic.push_back(p->grad());

  GradCheckResult res;
  NoGradGuard ng;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& val = params[pi]->value();
    for (size_t j = 0; j < val.size(); ++j) {
      const double orig = val[j];
      val[j] = orig + eps;
      const double fp = make_loss().item();
      val[j] = orig - eps;
      const double fm = make_loss().item();
      val[j] = orig;
      const double fd = (fp - fm) / (2 * eps);
      const double a = analytic[pi].empty() ? 0.0 : analytic[pi][j];
      const double rel =
          std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
      res.max_rel_err = std::max(res.max_rel_err, rel);
      ++res.checked;
    }
  }
  return res;
}

}  // namespace neuflow
