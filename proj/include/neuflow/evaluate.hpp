#pragma once

// Model-level evaluation: EPE / F1 over a dataset and the per-iteration EPE
// curve. Per-iteration entries convex-upsample each 1/8 flow through the
// mask head at that iteration's hidden state, so entry k equals what a
// forward run with iters8 = k would output.

#include <vector>

#include "neuflow/dataio/dataset.hpp"
#include "neuflow/eval.hpp"
#include "neuflow/model.hpp"

namespace neuflow {

inline MetricReport evaluate_model(const NeuFlow<float>& model, const Dataset& ds,
                                   int64_t iters16 = -1, int64_t iters8 = -1,
                                   int64_t max_samples = -1) {
  NF_CHECK(ds.size() > 0, "evaluate_model: empty dataset");
  NoGradGuard ng;
  const int64_t n = max_samples > 0 ? std::min<int64_t>(max_samples, ds.size()) : ds.size();
  double epe_sum = 0, f1_sum = 0;
  int64_t counted = 0;
  ForwardOptions opt;
  opt.iters16 = iters16;
  opt.iters8 = iters8;
  opt.record_sequence = false;
  for (int64_t i = 0; i < n; ++i) {
    const SynthSample s = ds.get(i);
    auto res = model.forward(image_to_tensor(s.img1), image_to_tensor(s.img2), opt);
    const FlowField pred = tensor_to_flow(res.final_flow);
    const auto e = epe(pred, s.gt, s.valid);
    const auto f = f1_all(pred, s.gt, s.valid);
    if (e && f) {
      epe_sum += *e;
      f1_sum += *f;
      ++counted;
    }
  }
  MetricReport r;
  r.samples = counted;
  if (counted) {
    r.epe = epe_sum / counted;
    r.f1 = f1_sum / counted;
  }
  return r;
}

// Mean EPE after each 1/8 refinement iteration, indexed by iters8 = 1..max.
inline std::vector<double> per_iteration_epe(const NeuFlow<float>& model,
                                             const Dataset& ds, int64_t max_iters8,
                                             int64_t iters16 = -1,
                                             int64_t max_samples = -1) {
  NF_CHECK(ds.size() > 0, "per_iteration_epe: empty dataset");
  NF_CHECK(max_iters8 >= 1, "per_iteration_epe: max_iters8 must be >= 1");
  NoGradGuard ng;
  const int64_t n = max_samples > 0 ? std::min<int64_t>(max_samples, ds.size()) : ds.size();
  ForwardOptions opt;
  opt.iters16 = iters16;
  opt.iters8 = max_iters8;
  opt.record_sequence = false;
  opt.per_iteration_output = true;
  std::vector<double> sums(static_cast<size_t>(max_iters8), 0.0);
  int64_t counted = 0;
  for (int64_t i = 0; i < n; ++i) {
    const SynthSample s = ds.get(i);
    auto res = model.forward(image_to_tensor(s.img1), image_to_tensor(s.img2), opt);
    NF_CHECK(static_cast<int64_t>(res.per_iter8.size()) == max_iters8,
             "per_iteration_epe: unexpected iteration count");
    bool ok = true;
    std::vector<double> vals(sums.size());
    for (size_t k = 0; k < sums.size(); ++k) {
      const auto e = epe(tensor_to_flow(res.per_iter8[k]), s.gt, s.valid);
      if (!e) {
        ok = false;
        break;
      }
      vals[k] = *e;
    }
    if (!ok) continue;
    for (size_t k = 0; k < sums.size(); ++k) sums[k] += vals[k];
    ++counted;
  }
  NF_CHECK(counted > 0, "per_iteration_epe: no sample had valid pixels");
  for (auto& s : sums) s /= counted;
  return sums;
}

}  // namespace neuflow
