#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "curate/error.hpp"
#include "curate/image.hpp"

namespace curate {

/// The four pixel-level quality indicators.
struct StatIndicators {
  double brightness = 0.0;          // mean luminance, [0, 1]
  double entropy = 0.0;             // bits, [0, 8]
  double saturation = 0.0;          // mean HSV saturation, [0, 1]
  double sharpness_variance = 0.0;  // variance of the Laplacian response

  bool operator==(const StatIndicators&) const = default;
};

struct BorderReport {
  std::size_t top = 0;
  std::size_t bottom = 0;
  std::size_t left = 0;
  std::size_t right = 0;
  double border_fraction = 0.0;

  bool operator==(const BorderReport&) const = default;
};

inline constexpr double kDefaultBorderTolerance = 1e-4;
inline constexpr std::size_t kEntropyBins = 256;

namespace detail {
template <class Img>
void require_nonempty(const Img& img) {
  if (img.empty()) throw Error(ErrorCode::EmptyImage, "image has no pixels");
}
}  // namespace detail

inline double brightness(const GrayImage& img) {
  detail::require_nonempty(img);
  double sum = 0.0;
  for (float v : img.pixels) sum += v;
  return std::clamp(sum / static_cast<double>(img.pixels.size()), 0.0, 1.0);
}

/// 8-bit quantisation bin of a luminance value.
inline std::size_t entropy_bin(float v) {
  // Round half up; the scaled value is never negative.
  const double d = static_cast<double>(std::clamp(v, 0.0f, 1.0f)) * 255.0;
  const auto q = static_cast<std::size_t>(d);
  return q + static_cast<std::size_t>(d - static_cast<double>(q) >= 0.5);
}

/// Shannon entropy (base 2) of the 256-bin luminance histogram.
inline double entropy(const GrayImage& img) {
  detail::require_nonempty(img);
  std::array<std::uint64_t, kEntropyBins> hist{};
  for (float v : img.pixels) ++hist[entropy_bin(v)];
  const double n = static_cast<double>(img.pixels.size());
  double h = 0.0;
  for (auto c : hist) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return std::clamp(h, 0.0, 8.0);
}

/// HSV saturation of one pixel: 0 when the max channel is 0, else (max-min)/max.
inline double hsv_saturation(const Rgb& p) {
  const float mx = std::max({p.r, p.g, p.b});
  if (mx <= 0.0f) return 0.0;
  const float mn = std::min({p.r, p.g, p.b});
  return static_cast<double>(mx - mn) / static_cast<double>(mx);
}

inline double saturation(const RgbImage& img) {
  detail::require_nonempty(img);
  double sum = 0.0;
  for (const auto& p : img.pixels) sum += hsv_saturation(p);
  return std::clamp(sum / static_cast<double>(img.pixels.size()), 0.0, 1.0);
}

/// Population variance of the 4-neighbour Laplacian over interior pixels.
inline double sharpness_variance(const GrayImage& img) {
  if (img.width < 3 || img.height < 3)
    throw Error(ErrorCode::ImageTooSmall, "sharpness needs at least 3x3 pixels");
  const std::size_t w = img.width;
  const float* p = img.pixels.data();
  auto lap = [&](std::size_t x, std::size_t y) {
    const std::size_t i = y * w + x;
    return static_cast<double>(p[i - w]) + static_cast<double>(p[i + w]) + static_cast<double>(p[i - 1]) +
           static_cast<double>(p[i + 1]) - 4.0 * static_cast<double>(p[i]);
  };
  const double n = static_cast<double>((img.width - 2) * (img.height - 2));
  double sum = 0.0;
  for (std::size_t y = 1; y + 1 < img.height; ++y)
    for (std::size_t x = 1; x + 1 < w; ++x) sum += lap(x, y);
  const double mean = sum / n;
  double ss = 0.0;
  for (std::size_t y = 1; y + 1 < img.height; ++y)
    for (std::size_t x = 1; x + 1 < w; ++x) {
      const double d = lap(x, y) - mean;
      ss += d * d;
    }
  return ss / n;
}

namespace detail {

template <class At>
double line_variance(std::size_t n, At&& at) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += at(i);
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = at(i) - mean;
    ss += d * d;
  }
  return ss / static_cast<double>(n);
}

}  // namespace detail

/// Peels uniform outer lines from each edge. A row (column) counts as
/// uniform when its luminance variance over the full image width (height) is
/// at most `uniformity_tol`. Top and left peel first, so a fully uniform
/// image reports top = height, left = width and fraction 1.
inline BorderReport detect_border(const GrayImage& img, double uniformity_tol = kDefaultBorderTolerance) {
  detail::require_nonempty(img);
  const std::size_t w = img.width, h = img.height;
  auto row_uniform = [&](std::size_t y) {
    return detail::line_variance(w, [&](std::size_t x) { return static_cast<double>(img.at(x, y)); }) <=
           uniformity_tol;
  };
  auto col_uniform = [&](std::size_t x) {
    return detail::line_variance(h, [&](std::size_t y) { return static_cast<double>(img.at(x, y)); }) <=
           uniformity_tol;
  };

  BorderReport r;
  while (r.top < h && row_uniform(r.top)) ++r.top;
  while (r.top + r.bottom < h && row_uniform(h - 1 - r.bottom)) ++r.bottom;
  while (r.left < w && col_uniform(r.left)) ++r.left;
  while (r.left + r.right < w && col_uniform(w - 1 - r.right)) ++r.right;

  const double inner = static_cast<double>(h - r.top - r.bottom) * static_cast<double>(w - r.left - r.right);
  const double total = static_cast<double>(w) * static_cast<double>(h);
  r.border_fraction = std::clamp(1.0 - inner / total, 0.0, 1.0);
  return r;
}

inline StatIndicators compute_indicators(const RgbImage& img) {
  const GrayImage gray = to_gray(img);
  return {brightness(gray), entropy(gray), saturation(img), sharpness_variance(gray)};
}

/// Gray input has zero saturation by definition.
inline StatIndicators compute_indicators(const GrayImage& img) {
  return {brightness(img), entropy(img), 0.0, sharpness_variance(img)};
}

}  // namespace curate
