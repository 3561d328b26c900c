#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "curate/digest.hpp"
#include "curate/image.hpp"
#include "curate/sample.hpp"

namespace fixtures {

inline std::vector<double> unit(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

inline std::vector<double> random_unit(std::mt19937_64& g, std::size_t dim) {
  std::normal_distribution<double> nd;
  std::vector<double> v(dim);
  for (double& x : v) x = nd(g);
  return unit(std::move(v));
}

inline curate::SampleRecord basic_record(const std::string& id, std::int64_t w = 1024, std::int64_t h = 1024) {
  curate::SampleRecord r;
  r.id = id;
  r.image_ref = "img/" + id + ".ppm";
  r.width = w;
  r.height = h;
  r.content_digest = curate::md5_hex(id);
  r.aesthetic_score = 6.0;
  r.source = "fixture";
  return r;
}

/// Mixed corpus: varied sizes and aesthetic scores, a few flags, some exact
/// duplicates, near-duplicate embeddings, content-rule hits and OCR records
/// whose captions are sometimes unfaithful.
inline std::vector<curate::SampleRecord> synthetic_corpus(std::size_t n, std::uint64_t seed, std::size_t dim = 8) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::vector<std::int64_t> sides{96, 200, 300, 600, 800, 1024, 2048};
  const std::vector<std::string> scenes{"a mountain lake at dawn", "portrait of a violinist", "city street in rain",
                                        "bowl of ramen on a wooden table", "macro shot of a dragonfly"};
  std::vector<curate::SampleRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = basic_record("s" + std::to_string(i));
    r.width = sides[g() % sides.size()];
    r.height = sides[g() % sides.size()];
    r.aesthetic_score = std::round(10.0 * u01(g) * 100.0) / 100.0;
    r.nsfw = u01(g) < 0.02;
    r.dense_text = u01(g) < 0.1;
    if (u01(g) < 0.04 && i > 0) r.content_digest = out[g() % i].content_digest;
    if (u01(g) < 0.05 && i > 0 && out[i - 1].embedding) {
      auto e = *out[i - 1].embedding;
      e[0] += 0.01;
      r.embedding = unit(std::move(e));
    } else {
      r.embedding = random_unit(g, dim);
    }
    std::string text = scenes[g() % scenes.size()];
    const double roll = u01(g);
    if (roll < 0.03) text += ", watermark in the corner";
    if (roll >= 0.03 && roll < 0.06) text = "collage of " + text;
    if (u01(g) < 0.15) {
      r.ocr_tokens = {"OPEN", "24H"};
      text += u01(g) < 0.7 ? " with a sign reading \"OPEN 24H\"" : " with a sign reading \"OPEN ALL NIGHT\"";
    }
    r.captions.push_back({curate::CaptionKind::Short, curate::Language::En, text});
    out.push_back(std::move(r));
  }
  return out;
}

/// Deterministic textured RGB image.
inline curate::RgbImage noise_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  curate::RgbImage img(w, h);
  for (auto& p : img.pixels) p = {u(g), u(g), u(g)};
  return img;
}

}  // namespace fixtures
