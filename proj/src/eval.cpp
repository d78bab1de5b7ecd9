#include "neuflow/eval.hpp"

#include <cmath>
#include <stdexcept>

namespace neuflow {

namespace {
void check_dims(const FlowField& pred, const FlowField& gt,
                const std::vector<uint8_t>& valid) {
  if (pred.h != gt.h || pred.w != gt.w)
    throw std::invalid_argument("metrics: pred/gt dims mismatch");
  if (!valid.empty() && static_cast<int64_t>(valid.size()) != gt.h * gt.w)
    throw std::invalid_argument("metrics: valid mask size mismatch");
}
}  // namespace

std::optional<double> epe(const FlowField& pred, const FlowField& gt,
                          const std::vector<uint8_t>& valid) {
  check_dims(pred, gt, valid);
  const int64_t hw = gt.h * gt.w;
  double s = 0;
  int64_t n = 0;
#pragma omp parallel for schedule(static) reduction(+ : s, n)
  for (int64_t p = 0; p < hw; ++p) {
    if (!valid.empty() && !valid[p]) continue;
    const double du = static_cast<double>(pred.uv[p]) - gt.uv[p];
    const double dv = static_cast<double>(pred.uv[hw + p]) - gt.uv[hw + p];
    s += std::sqrt(du * du + dv * dv);
    n += 1;
  }
  if (n == 0) return std::nullopt;
  return s / n;
}

std::optional<double> f1_all(const FlowField& pred, const FlowField& gt,
                             const std::vector<uint8_t>& valid) {
  check_dims(pred, gt, valid);
  const int64_t hw = gt.h * gt.w;
  int64_t n = 0, outliers = 0;
#pragma omp parallel for schedule(static) reduction(+ : n, outliers)
  for (int64_t p = 0; p < hw; ++p) {
    if (!valid.empty() && !valid[p]) continue;
    const double du = static_cast<double>(pred.uv[p]) - gt.uv[p];
    const double dv = static_cast<double>(pred.uv[hw + p]) - gt.uv[hw + p];
    const double err = std::sqrt(du * du + dv * dv);
    const double mag = std::sqrt(static_cast<double>(gt.uv[p]) * gt.uv[p] +
                                 static_cast<double>(gt.uv[hw + p]) * gt.uv[hw + p]);
    if (err > 3.0 && err > 0.05 * mag) outliers += 1;
    n += 1;
  }
  if (n == 0) return std::nullopt;
  return 100.0 * outliers / n;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["samples"] = samples;
  if (epe)
    j["epe"] = *epe;
  else
    j["epe"] = nullptr;
  if (f1)
    j["f1"] = *f1;
  else
    j["f1"] = nullptr;
  j["per_iteration_epe"] = per_iteration_epe;
  return j;
}

}  // namespace neuflow
