#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neuflow/dataio/types.hpp"

namespace neuflow {

struct MetricReport {
  std::optional<double> epe;  // absent when no pixel was valid
  std::optional<double> f1;   // outlier percentage, KITTI convention
  std::vector<double> per_iteration_epe;
  int64_t samples = 0;

  nlohmann::json to_json() const;
};

// Mean endpoint error over valid pixels; absent for an empty mask.
std::optional<double> epe(const FlowField& pred, const FlowField& gt,
                          const std::vector<uint8_t>& valid);

// Percentage of valid pixels with error > 3 px and > 5% of |gt|.
std::optional<double> f1_all(const FlowField& pred, const FlowField& gt,
                             const std::vector<uint8_t>& valid);

}  // namespace neuflow
