#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "curate/error.hpp"

namespace curate {

/// Row-major luminance in [0, 1].
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, float fill = 0.0f) : width(w), height(h), pixels(w * h, fill) {}

  bool empty() const { return width == 0 || height == 0; }
  float at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  float& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
};

struct Rgb {
  float r = 0, g = 0, b = 0;
};

/// Row-major RGB in [0, 1].
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Rgb> pixels;

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h, Rgb fill = {}) : width(w), height(h), pixels(w * h, fill) {}

  bool empty() const { return width == 0 || height == 0; }
  const Rgb& at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  Rgb& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
};

/// ITU-R BT.601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline float luminance(const Rgb& p) {
  const double y = kLumaR * p.r + kLumaG * p.g + kLumaB * p.b;
  return static_cast<float>(std::clamp(y, 0.0, 1.0));
}

inline GrayImage to_gray(const RgbImage& img) {
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = luminance(img.pixels[i]);
  return out;
}

inline RgbImage to_rgb(const GrayImage& img) {
  RgbImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const float v = img.pixels[i];
    out.pixels[i] = {v, v, v};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Portable graymap / pixmap (binary P5 / P6), maxval up to 65535.

namespace detail {

inline std::size_t pnm_read_uint(std::istream& in) {
  int c = in.get();
  for (;;) {
    while (c != EOF && std::isspace(c)) c = in.get();
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    break;
  }
  if (c == EOF || !std::isdigit(c)) throw Error(ErrorCode::MalformedLine, "malformed PNM header");
  std::size_t v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + static_cast<std::size_t>(c - '0');
    if (v > (1u << 30)) throw Error(ErrorCode::MalformedLine, "PNM header value too large");
    c = in.get();
  }
  return v;  // the single whitespace after the value has been consumed
}

}  // namespace detail

/// Decodes P5 (gray) or P6 (color). Gray input is replicated to RGB.
inline RgbImage read_pnm(std::istream& in) {
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    throw Error(ErrorCode::MalformedLine, "not a binary PGM/PPM stream");
  const bool color = magic[1] == '6';
  const std::size_t w = detail::pnm_read_uint(in);
  const std::size_t h = detail::pnm_read_uint(in);
  const std::size_t maxval = detail::pnm_read_uint(in);
  if (w == 0 || h == 0) throw Error(ErrorCode::EmptyImage, "PNM image has zero extent");
  if (maxval == 0 || maxval > 65535) throw Error(ErrorCode::MalformedLine, "PNM maxval out of range");

  const std::size_t channels = color ? 3 : 1;
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(w * h * channels * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw Error(ErrorCode::MalformedLine, "truncated PNM data");

  const float scale = 1.0f / static_cast<float>(maxval);
  auto sample = [&](std::size_t idx) -> float {
    std::size_t v = bytes_per == 2 ? (std::size_t{raw[2 * idx]} << 8) | raw[2 * idx + 1] : raw[idx];
    return std::min(1.0f, static_cast<float>(v) * scale);
  };
  RgbImage img(w, h);
  for (std::size_t i = 0; i < w * h; ++i) {
    if (color) {
      img.pixels[i] = {sample(3 * i), sample(3 * i + 1), sample(3 * i + 2)};
    } else {
      const float v = sample(i);
      img.pixels[i] = {v, v, v};
    }
  }
  return img;
}

inline RgbImage read_pnm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open image " + path);
  return read_pnm(in);
}

namespace detail {
inline unsigned char to_u8(float v) {
  return static_cast<unsigned char>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
}
}  // namespace detail

inline void write_pgm(const GrayImage& img, std::ostream& out) {
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (float v : img.pixels) out.put(static_cast<char>(detail::to_u8(v)));
}

inline void write_ppm(const RgbImage& img, std::ostream& out) {
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (const auto& p : img.pixels) {
    out.put(static_cast<char>(detail::to_u8(p.r)));
    out.put(static_cast<char>(detail::to_u8(p.g)));
    out.put(static_cast<char>(detail::to_u8(p.b)));
  }
}

}  // namespace curate
