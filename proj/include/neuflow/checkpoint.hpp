#pragma once

#include <string>

#include "neuflow/model.hpp"
#include "neuflow/optim.hpp"

namespace neuflow {

// Versioned container: 8-byte magic, u32 version, JSON header carrying the
// config, step counter, and the name/shape manifest, then raw float32
// little-endian payload in manifest order. Save -> load -> forward is
// bit-exact.
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     ParamMap<float>& params, const AdamW<float>* opt, int64_t step);

struct CheckpointInfo {
  ModelConfig config;
  int64_t step = 0;
};

// Re-initializes the model from the stored config and overwrites all weights
// (and optimizer state, when `opt` is given and the file carries it).
CheckpointInfo load_checkpoint(const std::string& path, NeuFlow<float>& model,
                               AdamW<float>* opt = nullptr);

}  // namespace neuflow
