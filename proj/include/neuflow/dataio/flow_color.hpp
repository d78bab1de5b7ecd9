#pragma once

#include "neuflow/dataio/types.hpp"

namespace neuflow {

// Middlebury 55-entry color wheel rendering: hue from direction, saturation
// from magnitude / max_mag (clipped to 1). Zero flow is white. max_mag <= 0
// picks the field's own maximum.
ImageU8 flow_to_color(const FlowField& flow, float max_mag = 0.f);

// The wheel itself (55 RGB entries), exposed for tests.
const std::vector<std::array<uint8_t, 3>>& middlebury_color_wheel();

// Color of a single flow vector at a given normalization.
std::array<uint8_t, 3> flow_vector_color(float u, float v, float max_mag);

}  // namespace neuflow
