#pragma once

#include <string>

#include "neuflow/dataio/types.hpp"

namespace neuflow {

// Middlebury .flo container: float magic 202021.25, int32 width, int32
// height, then row-major interleaved (u, v) float32 pairs. Little-endian,
// 12 + 8*w*h bytes total. Malformed files are rejected without partial
// results.
void write_flo(const FlowField& flow, const std::string& path);
FlowField read_flo(const std::string& path);

// KITTI 2015 16-bit PNG flow encoding:
//   u = (ch0 - 2^15) / 64,  v = (ch1 - 2^15) / 64,  valid = ch2 > 0.
void write_kitti_png(const FlowField& flow, const std::vector<uint8_t>& valid,
                     const std::string& path);
std::pair<FlowField, std::vector<uint8_t>> read_kitti_png(const std::string& path);

}  // namespace neuflow
