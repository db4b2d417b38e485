#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "crlm/error.hpp"
#include "crlm/volgrid/grid.hpp"

namespace crlm::pipeline {

struct RasterImage {
  std::int64_t width = 0;
  std::int64_t height = 0;
  int channels = 1;  // 1 gray, 4 rgba
  std::vector<std::uint8_t> pixels;  // row-major, channels interleaved
};

// Linear window/level to 8 bits: lo = wl - ww/2 maps to 0, lo + ww to 255,
// rounded to nearest and clamped.
inline std::uint8_t window_value(double v, double wl, double ww) {
  const double s = (v - (wl - ww / 2.0)) / ww * 255.0;
  return static_cast<std::uint8_t>(std::clamp(std::round(s), 0.0, 255.0));
}

inline RasterImage window_level(const Image2D& img, double wl, double ww) {
  if (!(ww > 0) || !std::isfinite(wl)) throw InvalidArgument("window width must be > 0");
  RasterImage out{img.cols(), img.rows(), 1, std::vector<std::uint8_t>(img.buffer().size())};
  for (std::size_t i = 0; i < img.buffer().size(); ++i) out.pixels[i] = window_value(img.buffer()[i], wl, ww);
  return out;
}

// Nonzero pixels become `rgb` with the given alpha; the rest are fully
// transparent.
inline RasterImage mask_overlay(const Mask2D& m, std::array<std::uint8_t, 3> rgb = {255, 64, 0}, std::uint8_t alpha = 128) {
  RasterImage out{m.cols(), m.rows(), 4, std::vector<std::uint8_t>(m.buffer().size() * 4, 0)};
  for (std::size_t i = 0; i < m.buffer().size(); ++i)
    if (m.buffer()[i]) {
      std::memcpy(&out.pixels[4 * i], rgb.data(), 3);
      out.pixels[4 * i + 3] = alpha;
    }
  return out;
}

namespace detail {

inline void png_append(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), n);
}

struct PngReadCursor {
  const std::string* bytes;
  std::size_t pos;
};

inline void png_consume(png_structp png, png_bytep data, png_size_t n) {
  auto* c = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (c->pos + n > c->bytes->size()) png_error(png, "truncated png");
  std::memcpy(data, c->bytes->data() + c->pos, n);
  c->pos += n;
}

}  // namespace detail

inline std::string encode_png(const RasterImage& img) {
  if (img.width < 1 || img.height < 1) throw InvalidArgument("png: empty image");
  if (img.channels != 1 && img.channels != 4) throw InvalidArgument("png: channels must be 1 or 4");
  if (img.pixels.size() != static_cast<std::size_t>(img.width * img.height * img.channels))
    throw InvalidArgument("png: pixel buffer size mismatch");
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: encode failed");
  }
  png_set_write_fn(png, &out, detail::png_append, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto stride = static_cast<std::size_t>(img.width * img.channels);
  for (std::int64_t r = 0; r < img.height; ++r)
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(r) * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

// Decodes 8-bit gray or RGBA images (the formats encode_png writes).
inline RasterImage decode_png(const std::string& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8))
    throw IoError(IoErrorKind::bad_magic, "png");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png: out of memory");
  }
  RasterImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(IoErrorKind::truncated_payload, "png");
  }
  detail::PngReadCursor cur{&bytes, 0};
  png_set_read_fn(png, &cur, detail::png_consume);
  png_read_info(png, info);
  const int type = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) != 8 || (type != PNG_COLOR_TYPE_GRAY && type != PNG_COLOR_TYPE_RGBA)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(IoErrorKind::unsupported_datatype, "png: only 8-bit gray or rgba");
  }
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = type == PNG_COLOR_TYPE_GRAY ? 1 : 4;
  img.pixels.resize(static_cast<std::size_t>(img.width * img.height * img.channels));
  const auto stride = static_cast<std::size_t>(img.width * img.channels);
  for (std::int64_t r = 0; r < img.height; ++r) png_read_row(png, img.pixels.data() + static_cast<std::size_t>(r) * stride, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace crlm::pipeline
