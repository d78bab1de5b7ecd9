#include "neuflow/dataio/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>

namespace neuflow {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void io_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("png: " + what + ": " + path);
}

void write_png(const std::string& path, int64_t h, int64_t w, int color_type,
               int bit_depth, const uint8_t* data, size_t row_bytes) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) io_fail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    io_fail(path, "write error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // in-memory data is little-endian
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int64_t y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(data + y * row_bytes);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct PngImage {
  int64_t h = 0, w = 0;
  int bit_depth = 0, channels = 0;
  std::vector<uint8_t> data;
};

PngImage read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) io_fail(path, "cannot open");
  uint8_t header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
    io_fail(path, "not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    io_fail(path, "corrupt PNG data");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  PngImage img;
  img.w = png_get_image_width(png, info);
  img.h = png_get_image_height(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (img.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (img.bit_depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  img.channels = png_get_channels(png, info);

  const size_t row_bytes = png_get_rowbytes(png, info);
  img.data.resize(row_bytes * static_cast<size_t>(img.h));
  std::vector<png_bytep> rows(static_cast<size_t>(img.h));
  for (int64_t y = 0; y < img.h; ++y) rows[y] = img.data.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace

void write_png8(const std::string& path, const ImageU8& img) {
  write_png(path, img.h, img.w, PNG_COLOR_TYPE_RGB, 8, img.rgb.data(),
            static_cast<size_t>(img.w) * 3);
}

ImageU8 read_png8(const std::string& path) {
  PngImage p = read_png(path);
  if (p.bit_depth != 8) io_fail(path, "expected 8-bit image");
  ImageU8 out{p.h, p.w, std::vector<uint8_t>(static_cast<size_t>(p.h * p.w * 3))};
  for (int64_t i = 0; i < p.h * p.w; ++i)
    for (int64_t c = 0; c < 3; ++c)
      out.rgb[i * 3 + c] = p.channels >= 3 ? p.data[i * p.channels + c] : p.data[i * p.channels];
  return out;
}

void write_png8_gray(const std::string& path, int64_t h, int64_t w,
                     const std::vector<uint8_t>& gray) {
  write_png(path, h, w, PNG_COLOR_TYPE_GRAY, 8, gray.data(), static_cast<size_t>(w));
}

std::vector<uint8_t> read_png8_gray(const std::string& path, int64_t* h, int64_t* w) {
  PngImage p = read_png(path);
  if (p.bit_depth != 8) io_fail(path, "expected 8-bit mask");
  *h = p.h;
  *w = p.w;
  std::vector<uint8_t> out(static_cast<size_t>(p.h * p.w));
  for (int64_t i = 0; i < p.h * p.w; ++i) out[i] = p.data[i * p.channels];
  return out;
}

void write_png16(const std::string& path, int64_t h, int64_t w,
                 const std::vector<uint16_t>& rgb) {
  write_png(path, h, w, PNG_COLOR_TYPE_RGB, 16,
            reinterpret_cast<const uint8_t*>(rgb.data()), static_cast<size_t>(w) * 6);
}

std::vector<uint16_t> read_png16(const std::string& path, int64_t* h, int64_t* w) {
  PngImage p = read_png(path);
  if (p.bit_depth != 16)
    io_fail(path, "expected 16-bit image, got " + std::to_string(p.bit_depth) + "-bit");
  if (p.channels != 3)
    io_fail(path, "expected 3 channels, got " + std::to_string(p.channels));
  *h = p.h;
  *w = p.w;
  const uint16_t* src = reinterpret_cast<const uint16_t*>(p.data.data());
  return std::vector<uint16_t>(src, src + p.h * p.w * 3);
}

}  // namespace neuflow
