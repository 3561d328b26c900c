#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "curate/error.hpp"
#include "curate/random.hpp"

namespace curate {

inline bool is_rubric_score(int v) { return v == 5 || v == 4 || v == 3 || v == 0; }

struct AnnotationScore {
  std::string sample_id;
  std::string annotator_id;
  int aesthetics = 0;
  int info_density = 0;
  int style_purity = 0;

  bool valid() const { return is_rubric_score(aesthetics) && is_rubric_score(info_density) && is_rubric_score(style_purity); }
  bool same_scores(const AnnotationScore& o) const {
    return aesthetics == o.aesthetics && info_density == o.info_density && style_purity == o.style_purity;
  }
  bool operator==(const AnnotationScore&) const = default;
};

struct Composite {
  double value = 0.0;
  bool eliminated = false;
};

/// 0.5 aesthetics + 0.3 information density + 0.2 style purity, computed in
/// integer tenths so that values such as 4.2 come out exact. Any zero
/// dimension eliminates the sample.
inline Composite composite_score(const AnnotationScore& a) {
  const int tenths = 5 * a.aesthetics + 3 * a.info_density + 2 * a.style_purity;
  return {tenths / 10.0, a.aesthetics == 0 || a.info_density == 0 || a.style_purity == 0};
}

struct SentinelRecord {
  std::string sample_id;
  AnnotationScore truth;
};

struct BatchItem {
  std::string sample_id;
  bool sentinel = false;

  bool operator==(const BatchItem&) const = default;
};

/// Batch position -> sentinel placed there. Not shown to annotators.
using SentinelKey = std::map<std::size_t, SentinelRecord>;

struct SeededBatch {
  std::vector<BatchItem> items;
  SentinelKey key;
};

/// Inserts ceil(rate * |batch|) sentinels drawn from the pool at seeded
/// positions. Original samples keep their relative order.
inline SeededBatch seed_sentinels(const std::vector<std::string>& batch, const std::vector<SentinelRecord>& pool,
                                  double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error(ErrorCode::InvalidArgument, "sentinel rate must lie in [0, 1]");
  const std::size_t k = ceil_fraction(rate, batch.size());
  if (k > pool.size())
    throw Error(ErrorCode::PoolTooSmall,
                "need " + std::to_string(k) + " sentinels, pool has " + std::to_string(pool.size()));
  Rng rng(seed);
  const auto picks = sample_indices(pool.size(), k, rng);
  auto positions = sample_indices(batch.size() + k, k, rng);
  std::sort(positions.begin(), positions.end());

  SeededBatch out;
  out.items.reserve(batch.size() + k);
  std::size_t next_pos = 0, next_orig = 0;
  for (std::size_t p = 0; p < batch.size() + k; ++p) {
    if (next_pos < k && positions[next_pos] == p) {
      const SentinelRecord& s = pool[picks[next_pos++]];
      out.items.push_back({s.sample_id, true});
      out.key.emplace(p, s);
    } else {
      out.items.push_back({batch[next_orig++], false});
    }
  }
  return out;
}

enum class SentinelMatch {
  Exact,      // all three dimensions equal the truth
  WithinOne,  // each dimension within one point of the truth
};

inline bool sentinel_correct(const AnnotationScore& a, const AnnotationScore& truth, SentinelMatch mode) {
  if (mode == SentinelMatch::Exact) return a.same_scores(truth);
  return std::abs(a.aesthetics - truth.aesthetics) <= 1 && std::abs(a.info_density - truth.info_density) <= 1 &&
         std::abs(a.style_purity - truth.style_purity) <= 1;
}

struct AnnotatorEvaluation {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 1.0;
  bool flagged = false;
};

/// Accuracy of one annotator's labels on the sentinels of a seeded batch.
/// Annotations are matched to sentinels by sample id. Flagged iff accuracy
/// is strictly below accuracy_min.
inline AnnotatorEvaluation evaluate_annotator(const std::vector<AnnotationScore>& annotations, const SentinelKey& key,
                                              double accuracy_min = 0.90,
                                              SentinelMatch mode = SentinelMatch::Exact) {
  std::unordered_map<std::string, const AnnotationScore*> by_id;
  for (const auto& a : annotations) by_id.try_emplace(a.sample_id, &a);
  AnnotatorEvaluation ev;
  for (const auto& [pos, s] : key) {
    auto it = by_id.find(s.sample_id);
    if (it == by_id.end())
      throw Error(ErrorCode::MissingSentinelAnnotation, "position " + std::to_string(pos) + " ('" + s.sample_id + "')");
    ++ev.total;
    if (sentinel_correct(*it->second, s.truth, mode)) ++ev.correct;
  }
  if (ev.total > 0) ev.accuracy = static_cast<double>(ev.correct) / static_cast<double>(ev.total);
  ev.flagged = ev.accuracy < accuracy_min;
  return ev;
}

/// Splits annotations by annotator and evaluates each one.
inline std::map<std::string, AnnotatorEvaluation> evaluate_annotators(const std::vector<AnnotationScore>& annotations,
                                                                      const SentinelKey& key, double accuracy_min = 0.90,
                                                                      SentinelMatch mode = SentinelMatch::Exact) {
  std::map<std::string, std::vector<AnnotationScore>> by_annotator;
  for (const auto& a : annotations) by_annotator[a.annotator_id].push_back(a);
  std::map<std::string, AnnotatorEvaluation> out;
  for (const auto& [who, list] : by_annotator) out.emplace(who, evaluate_annotator(list, key, accuracy_min, mode));
  return out;
}

enum class AuditVerdict { Accepted, Returned };

inline std::string_view to_string(AuditVerdict v) { return v == AuditVerdict::Accepted ? "accepted" : "returned"; }

struct AuditReport {
  std::string batch_id;
  std::size_t audited = 0;
  std::size_t low_quality = 0;
  bool pass_rate_violated = false;
  AuditVerdict verdict = AuditVerdict::Accepted;
  std::vector<std::string> audited_ids;  // draw order
};

/// Audits a seeded uniform draw of ceil(audit_rate * |accepted|) samples.
/// The batch is returned iff the low-quality fraction of the audit exceeds
/// fail_rate_max. `low_quality` maps sample id to its judgment; only audited
/// samples need one.
inline AuditReport audit_batch(std::string batch_id, const std::vector<std::string>& accepted,
                               const std::unordered_map<std::string, bool>& low_quality, double audit_rate,
                               double fail_rate_max, std::uint64_t seed) {
  if (accepted.empty()) throw Error(ErrorCode::EmptyBatch, batch_id);
  if (!(audit_rate > 0.0 && audit_rate <= 1.0) || !(fail_rate_max > 0.0 && fail_rate_max <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "audit rates must lie in (0, 1]");
  AuditReport r;
  r.batch_id = std::move(batch_id);
  Rng rng(seed);
  for (std::size_t i : sample_indices(accepted.size(), ceil_fraction(audit_rate, accepted.size()), rng)) {
    const std::string& id = accepted[i];
    auto it = low_quality.find(id);
    if (it == low_quality.end()) throw Error(ErrorCode::MissingJudgment, id);
    r.audited_ids.push_back(id);
    if (it->second) ++r.low_quality;
  }
  r.audited = r.audited_ids.size();
  r.pass_rate_violated = static_cast<double>(r.low_quality) / static_cast<double>(r.audited) > fail_rate_max;
  r.verdict = r.pass_rate_violated ? AuditVerdict::Returned : AuditVerdict::Accepted;
  return r;
}

struct ScoreBand {
  const char* label;
  int lo, hi;  // score range, inclusive
  double target_min, target_max;
};

inline constexpr std::array<ScoreBand, 3> kCalibrationBands{{
    {"4-5", 4, 5, 0.10, 0.30},
    {"3", 3, 3, 0.30, 0.50},
    {"0", 0, 0, 0.30, 0.40},
}};

/// Observed share of each calibration band per dimension, next to its target
/// range. Informational only.
inline nlohmann::ordered_json calibration_report(const std::vector<AnnotationScore>& annotations) {
  nlohmann::ordered_json out;
  const std::array<std::pair<const char*, int AnnotationScore::*>, 3> dims{{
      {"aesthetics", &AnnotationScore::aesthetics},
      {"info_density", &AnnotationScore::info_density},
      {"style_purity", &AnnotationScore::style_purity},
  }};
  for (const auto& [name, field] : dims) {
    nlohmann::ordered_json bands = nlohmann::ordered_json::array();
    for (const auto& b : kCalibrationBands) {
      std::size_t n = 0;
      for (const auto& a : annotations) n += (a.*field >= b.lo && a.*field <= b.hi);
      const double share = annotations.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(annotations.size());
      nlohmann::ordered_json j;
      j["band"] = b.label;
      j["observed"] = share;
      j["target"] = {b.target_min, b.target_max};
      j["within_target"] = share >= b.target_min && share <= b.target_max;
      bands.push_back(std::move(j));
    }
    out[name] = std::move(bands);
  }
  return out;
}

inline nlohmann::ordered_json to_json(const AnnotationScore& a) {
  nlohmann::ordered_json j;
  j["sample_id"] = a.sample_id;
  j["annotator_id"] = a.annotator_id;
  j["aesthetics"] = a.aesthetics;
  j["info_density"] = a.info_density;
  j["style_purity"] = a.style_purity;
  return j;
}

inline AnnotationScore annotation_from_json(const nlohmann::json& j) {
  AnnotationScore a;
  a.sample_id = j.at("sample_id").get<std::string>();
  a.annotator_id = j.value("annotator_id", std::string{});
  a.aesthetics = j.at("aesthetics").get<int>();
  a.info_density = j.at("info_density").get<int>();
  a.style_purity = j.at("style_purity").get<int>();
  if (!a.valid()) throw Error(ErrorCode::InvalidArgument, "scores of '" + a.sample_id + "' outside {5,4,3,0}");
  return a;
}

inline nlohmann::ordered_json to_json(const SentinelRecord& s) {
  nlohmann::ordered_json j;
  j["sample_id"] = s.sample_id;
  j["aesthetics"] = s.truth.aesthetics;
  j["info_density"] = s.truth.info_density;
  j["style_purity"] = s.truth.style_purity;
  return j;
}

inline SentinelRecord sentinel_from_json(const nlohmann::json& j) {
  AnnotationScore t = annotation_from_json(j);
  t.annotator_id.clear();
  return {t.sample_id, t};
}

inline nlohmann::ordered_json to_json(const AuditReport& r) {
  nlohmann::ordered_json j;
  j["batch_id"] = r.batch_id;
  j["audited"] = r.audited;
  j["low_quality"] = r.low_quality;
  j["pass_rate_violated"] = r.pass_rate_violated;
  j["verdict"] = to_string(r.verdict);
  j["audited_ids"] = r.audited_ids;
  return j;
}

template <class T, class Parse>
std::vector<T> read_json_lines(const std::string& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<AnnotationScore> load_annotations(const std::string& path) {
  return read_json_lines<AnnotationScore>(path, [](const nlohmann::json& j) { return annotation_from_json(j); });
}

inline std::vector<SentinelRecord> load_sentinel_pool(const std::string& path) {
  return read_json_lines<SentinelRecord>(path, [](const nlohmann::json& j) { return sentinel_from_json(j); });
}

}  // namespace curate
