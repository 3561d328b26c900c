#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "curate/cascade.hpp"
#include "curate/error.hpp"
#include "curate/image.hpp"
#include "curate/random.hpp"
#include "curate/sample.hpp"
#include "curate/stat_metrics.hpp"

namespace curate {

/// Everything the quality cascade and border check need about one image.
struct QualityEvidence {
  StatIndicators stats;
  PerceptualScores perceptual;
  BorderReport border;

  bool operator==(const QualityEvidence&) const = default;
};

/// Source of quality evidence. Production adapters wrap external models;
/// tests use deterministic doubles. Implementations that cannot be called
/// from several threads at once return false from concurrent_safe() and the
/// pipeline then calls them from one thread.
class QualityScorer {
 public:
  virtual ~QualityScorer() = default;
  virtual QualityEvidence score(const SampleRecord& r) const = 0;
  virtual bool concurrent_safe() const { return true; }
};

/// Deterministic double: every value is a pure function of (salt, record id).
class SyntheticScorer final : public QualityScorer {
 public:
  explicit SyntheticScorer(std::uint64_t salt = 0) : salt_(salt) {}

  QualityEvidence score(const SampleRecord& r) const override {
    std::uint64_t state = derive_seed(salt_, r.id);
    auto u = [&state] {
      state = splitmix64(state);
      return static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    QualityEvidence e;
    e.stats.brightness = u();
    e.stats.entropy = 8.0 * u();
    e.stats.saturation = 0.6 * u();
    e.stats.sharpness_variance = std::pow(10.0, -5.0 + 5.5 * u());  // 1e-5 .. ~3
    e.perceptual.niqe = 2.0 + 12.0 * u();
    e.perceptual.clip_iqa = 0.2 + 0.8 * u();
    e.perceptual.musiq = 20.0 + 60.0 * u();
    e.border.border_fraction = u() < 0.85 ? 0.0 : 0.3 * u();
    return e;
  }

 private:
  std::uint64_t salt_;
};

/// Pixel-side evidence computed from the record's image file (binary PGM/PPM).
inline void fill_from_image(const std::string& path, QualityEvidence& e, bool stats, bool border,
                            double border_tol = kDefaultBorderTolerance) {
  const RgbImage img = read_pnm_file(path);
  if (stats) e.stats = compute_indicators(img);
  if (border) e.border = detect_border(to_gray(img), border_tol);
}

/// Precomputed scores keyed by record id (JSON-lines). Perceptual scores are
/// required; statistical indicators and border_fraction are optional and,
/// when absent, are computed from image_ref resolved against `image_root`.
class TableScorer final : public QualityScorer {
 public:
  struct Row {
    PerceptualScores perceptual;
    std::optional<StatIndicators> stats;
    std::optional<double> border_fraction;
  };

  TableScorer() = default;
  explicit TableScorer(std::filesystem::path image_root) : image_root_(std::move(image_root)) {}

  void insert(std::string id, Row row) { rows_[std::move(id)] = row; }

  static TableScorer load(const std::string& path, std::filesystem::path image_root = {}) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open scores file " + path);
    TableScorer t(std::move(image_root));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        Row row;
        row.perceptual = {j.at("niqe").get<double>(), j.at("clip_iqa").get<double>(), j.at("musiq").get<double>()};
        if (j.contains("brightness") && j.contains("entropy") && j.contains("saturation") &&
            j.contains("sharpness_variance")) {
          row.stats = StatIndicators{j["brightness"].get<double>(), j["entropy"].get<double>(),
                                     j["saturation"].get<double>(), j["sharpness_variance"].get<double>()};
        }
        if (j.contains("border_fraction") && !j["border_fraction"].is_null())
          row.border_fraction = j["border_fraction"].get<double>();
        t.insert(j.at("id").get<std::string>(), row);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedLine, path + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return t;
  }

  QualityEvidence score(const SampleRecord& r) const override {
    auto it = rows_.find(r.id);
    if (it == rows_.end()) throw Error(ErrorCode::ScorerFailure, "no scores for '" + r.id + "'");
    const Row& row = it->second;
    QualityEvidence e;
    e.perceptual = row.perceptual;
    if (row.stats) e.stats = *row.stats;
    if (row.border_fraction) e.border.border_fraction = *row.border_fraction;
    if (!row.stats || !row.border_fraction) {
      std::filesystem::path p(r.image_ref);
      if (p.is_relative() && !image_root_.empty()) p = image_root_ / p;
      fill_from_image(p.string(), e, !row.stats, !row.border_fraction);
    }
    return e;
  }

 private:
  std::filesystem::path image_root_;
  std::unordered_map<std::string, Row> rows_;
};

}  // namespace curate
