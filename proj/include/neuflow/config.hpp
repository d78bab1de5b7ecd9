#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "neuflow/core/shape.hpp"

namespace neuflow {

struct AttentionConfig {
  int64_t num_layers = 2;
  int64_t num_heads = 1;
  bool use_positional_encoding = true;
};

struct RefineConfig {
  int64_t num_conv_layers = 8;
  std::string variant = "gate_free";  // gate_free | conv_gru
  bool residual_flow = false;         // experiment knob; default is direct prediction
};

struct ModelConfig {
  int64_t dim16 = 128;
  int64_t dim8 = 96;
  int64_t lowlevel_dim = 64;  // per-scale width of the backbone encoders
  int64_t iters16 = 1;
  int64_t iters8 = 8;
  int64_t corr_radius = 4;
  RefineConfig refine;
  AttentionConfig attention;

  void validate() const {
    NF_CHECK(dim16 > 0 && dim8 > 0 && lowlevel_dim > 0, "config: dims must be positive");
    NF_CHECK(dim16 % 8 == 0 && dim8 % 8 == 0 && lowlevel_dim % 8 == 0,
             "config: dims must be multiples of 8");
    NF_CHECK(iters16 >= 0, "config: iters16 must be >= 0");
    NF_CHECK(iters8 >= 1, "config: iters8 must be >= 1");
    NF_CHECK(corr_radius >= 1, "config: corr_radius must be >= 1");
    NF_CHECK(refine.num_conv_layers >= 2, "config: refine.num_conv_layers must be >= 2");
    NF_CHECK(refine.variant == "gate_free" || refine.variant == "conv_gru",
             "config: unknown refine variant '" + refine.variant + "'");
    NF_CHECK(attention.num_layers >= 1 && attention.num_heads >= 1,
             "config: attention layers/heads must be >= 1");
    NF_CHECK(dim16 % attention.num_heads == 0,
             "config: dim16 must be divisible by attention heads");
    NF_CHECK(dim16 % 4 == 0, "config: dim16 must be divisible by 4 for positional encoding");
  }
};

inline void to_json(nlohmann::json& j, const AttentionConfig& c) {
  j = {{"num_layers", c.num_layers},
       {"num_heads", c.num_heads},
       {"use_positional_encoding", c.use_positional_encoding}};
}
inline void from_json(const nlohmann::json& j, AttentionConfig& c) {
  c.num_layers = j.value("num_layers", c.num_layers);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.use_positional_encoding = j.value("use_positional_encoding", c.use_positional_encoding);
}

inline void to_json(nlohmann::json& j, const RefineConfig& c) {
  j = {{"num_conv_layers", c.num_conv_layers},
       {"variant", c.variant},
       {"residual_flow", c.residual_flow}};
}
inline void from_json(const nlohmann::json& j, RefineConfig& c) {
  c.num_conv_layers = j.value("num_conv_layers", c.num_conv_layers);
  c.variant = j.value("variant", c.variant);
  c.residual_flow = j.value("residual_flow", c.residual_flow);
}

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"dim16", c.dim16},
       {"dim8", c.dim8},
       {"lowlevel_dim", c.lowlevel_dim},
       {"iters16", c.iters16},
       {"iters8", c.iters8},
       {"corr_radius", c.corr_radius},
       {"refine", c.refine},
       {"attention", c.attention}};
}
inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.dim16 = j.value("dim16", c.dim16);
  c.dim8 = j.value("dim8", c.dim8);
  c.lowlevel_dim = j.value("lowlevel_dim", c.lowlevel_dim);
  c.iters16 = j.value("iters16", c.iters16);
  c.iters8 = j.value("iters8", c.iters8);
  c.corr_radius = j.value("corr_radius", c.corr_radius);
  if (j.contains("refine")) j.at("refine").get_to(c.refine);
  if (j.contains("attention")) j.at("attention").get_to(c.attention);
}

}  // namespace neuflow
