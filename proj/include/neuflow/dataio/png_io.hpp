#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "neuflow/dataio/types.hpp"

namespace neuflow {

// 8-bit RGB
void write_png8(const std::string& path, const ImageU8& img);
ImageU8 read_png8(const std::string& path);

// 8-bit grayscale (valid masks)
void write_png8_gray(const std::string& path, int64_t h, int64_t w,
                     const std::vector<uint8_t>& gray);
std::vector<uint8_t> read_png8_gray(const std::string& path, int64_t* h, int64_t* w);

// 16-bit RGB (KITTI flow encoding); rejects any other depth/channel layout
void write_png16(const std::string& path, int64_t h, int64_t w,
                 const std::vector<uint16_t>& rgb);
std::vector<uint16_t> read_png16(const std::string& path, int64_t* h, int64_t* w);

}  // namespace neuflow
