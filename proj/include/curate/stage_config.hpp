#pragma once

#include <array>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "curate/cascade.hpp"
#include "curate/error.hpp"

namespace curate {

/// Threshold set of one pre-training stage.
struct StageConfig {
  int stage = 1;
  std::int64_t min_side = 128;              // accept iff min(w, h) > min_side
  std::optional<double> aesthetic_min;      // accept iff aesthetic >= this
  bool iqa_enabled = false;
  std::optional<std::int64_t> dense_ocr_min_side;
  bool border_enabled = false;
  double border_fraction_max = 0.10;
  bool rebalance_enabled = false;
  std::optional<double> artimuse_min;
  std::optional<double> semantic_dedup_tau = 0.95;
  CascadeThresholds cascade;

  bool operator==(const StageConfig&) const = default;
};

/// The three pre-training stages (208p / 512p / 1024p). Stage 3 uses a
/// tightened cascade so that it is at least as strict as stage 2 everywhere.
inline StageConfig default_stage_config(int stage) {
  StageConfig c;
  c.stage = stage;
  switch (stage) {
    case 1:
      c.min_side = 128;
      c.aesthetic_min = 3.0;
      break;
    case 2:
      c.min_side = 256;
      c.aesthetic_min = 4.6;
      c.iqa_enabled = true;
      c.dense_ocr_min_side = 512;
      c.border_enabled = true;
      break;
    case 3: {
      c.min_side = 512;
      c.aesthetic_min = 4.6;
      c.iqa_enabled = true;
      c.dense_ocr_min_side = 768;
      c.border_enabled = true;
      c.rebalance_enabled = true;
      auto& t = c.cascade;
      t.stat_pass.entropy.lo = 4.0;
      t.stat_pass.sharpness_variance.lo = 2e-4;
      t.perceptual_pass = {5.0, 0.55, 50.0};
      t.perceptual_relaxed = {7.0, 0.45, 40.0};
      t.saturation_recovery_min = 0.2;
      t.niqe_hard_max = 10.0;
      break;
    }
    default:
      throw Error(ErrorCode::Config, "stage must be 1, 2 or 3");
  }
  return c;
}

inline std::array<StageConfig, 3> default_curriculum() {
  return {default_stage_config(1), default_stage_config(2), default_stage_config(3)};
}

/// True when `strict` rejects everything `loose` rejects: every bound is
/// at least as tight and every optional filter enabled in `loose` is enabled
/// in `strict`.
inline bool at_least_as_strict(const StageConfig& strict, const StageConfig& loose) {
  auto opt_ge = [](const auto& s, const auto& l) { return !l || (s && *s >= *l); };
  auto opt_le = [](const auto& s, const auto& l) { return !l || (s && *s <= *l); };
  const auto& a = strict.cascade;
  const auto& b = loose.cascade;
  const bool cascade_ok = !loose.iqa_enabled ||
                          (strict.iqa_enabled && a.brightness_skip_max >= b.brightness_skip_max &&
                           b.stat_pass.covers(a.stat_pass) && b.perceptual_pass.covers(a.perceptual_pass) &&
                           b.perceptual_relaxed.covers(a.perceptual_relaxed) &&
                           a.saturation_recovery_min >= b.saturation_recovery_min &&
                           a.niqe_hard_max <= b.niqe_hard_max && b.stat_abnormal.covers(a.stat_abnormal));
  const bool border_ok =
      !loose.border_enabled || (strict.border_enabled && strict.border_fraction_max <= loose.border_fraction_max);
  return strict.min_side >= loose.min_side && opt_ge(strict.aesthetic_min, loose.aesthetic_min) &&
         opt_ge(strict.dense_ocr_min_side, loose.dense_ocr_min_side) &&
         opt_ge(strict.artimuse_min, loose.artimuse_min) && cascade_ok && border_ok &&
         opt_le(strict.semantic_dedup_tau, loose.semantic_dedup_tau);
}

// ---------------------------------------------------------------------------
// JSON. Keys mirror the field names; missing keys keep the stage default.

namespace detail {

inline nlohmann::ordered_json bound_json(double v) {
  return std::isinf(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
}

inline nlohmann::ordered_json interval_json(const Interval& i) {
  return nlohmann::ordered_json::array({bound_json(i.lo), bound_json(i.hi)});
}

inline Interval interval_from(const nlohmann::json& j, Interval dflt) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::Config, "interval must be [lo, hi]");
  auto side = [](const nlohmann::json& v, double inf) {
    if (v.is_null()) return inf;
    if (!v.is_number()) throw Error(ErrorCode::Config, "interval bound must be a number or null");
    return v.get<double>();
  };
  dflt.lo = side(j[0], -kInf);
  dflt.hi = side(j[1], kInf);
  return dflt;
}

inline nlohmann::ordered_json stat_bounds_json(const StatBounds& b) {
  nlohmann::ordered_json j;
  j["brightness"] = interval_json(b.brightness);
  j["entropy"] = interval_json(b.entropy);
  j["saturation"] = interval_json(b.saturation);
  j["sharpness_variance"] = interval_json(b.sharpness_variance);
  return j;
}

inline void stat_bounds_from(const nlohmann::json& j, StatBounds& b) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "stat bounds must be an object");
  if (j.contains("brightness")) b.brightness = interval_from(j["brightness"], b.brightness);
  if (j.contains("entropy")) b.entropy = interval_from(j["entropy"], b.entropy);
  if (j.contains("saturation")) b.saturation = interval_from(j["saturation"], b.saturation);
  if (j.contains("sharpness_variance"))
    b.sharpness_variance = interval_from(j["sharpness_variance"], b.sharpness_variance);
}

inline nlohmann::ordered_json perceptual_json(const PerceptualBounds& b) {
  nlohmann::ordered_json j;
  j["niqe_max"] = bound_json(b.niqe_max);
  j["clip_iqa_min"] = bound_json(b.clip_iqa_min);
  j["musiq_min"] = bound_json(b.musiq_min);
  return j;
}

inline void perceptual_from(const nlohmann::json& j, PerceptualBounds& b) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "perceptual bounds must be an object");
  auto read = [&](const char* k, double& dst, double inf) {
    if (!j.contains(k)) return;
    dst = j[k].is_null() ? inf : j[k].get<double>();
  };
  read("niqe_max", b.niqe_max, kInf);
  read("clip_iqa_min", b.clip_iqa_min, -kInf);
  read("musiq_min", b.musiq_min, -kInf);
}

template <class T>
nlohmann::ordered_json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

template <class T>
void read_opt(const nlohmann::json& j, const char* k, std::optional<T>& dst) {
  if (!j.contains(k)) return;
  if (j[k].is_null()) dst.reset();
  else dst = j[k].get<T>();
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const CascadeThresholds& t) {
  nlohmann::ordered_json j;
  j["brightness_skip_max"] = t.brightness_skip_max;
  j["stat_pass"] = detail::stat_bounds_json(t.stat_pass);
  j["perceptual_pass"] = detail::perceptual_json(t.perceptual_pass);
  j["perceptual_relaxed"] = detail::perceptual_json(t.perceptual_relaxed);
  j["saturation_recovery_min"] = t.saturation_recovery_min;
  j["niqe_hard_max"] = t.niqe_hard_max;
  j["stat_abnormal"] = detail::stat_bounds_json(t.stat_abnormal);
  return j;
}

inline void cascade_from_json(const nlohmann::json& j, CascadeThresholds& t) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "cascade must be an object");
  if (j.contains("brightness_skip_max")) t.brightness_skip_max = j["brightness_skip_max"].get<double>();
  if (j.contains("stat_pass")) detail::stat_bounds_from(j["stat_pass"], t.stat_pass);
  if (j.contains("perceptual_pass")) detail::perceptual_from(j["perceptual_pass"], t.perceptual_pass);
  if (j.contains("perceptual_relaxed")) detail::perceptual_from(j["perceptual_relaxed"], t.perceptual_relaxed);
  if (j.contains("saturation_recovery_min")) t.saturation_recovery_min = j["saturation_recovery_min"].get<double>();
  if (j.contains("niqe_hard_max")) t.niqe_hard_max = j["niqe_hard_max"].get<double>();
  if (j.contains("stat_abnormal")) detail::stat_bounds_from(j["stat_abnormal"], t.stat_abnormal);
}

inline nlohmann::ordered_json to_json(const StageConfig& c) {
  nlohmann::ordered_json j;
  j["stage"] = c.stage;
  j["min_side"] = c.min_side;
  j["aesthetic_min"] = detail::opt_json(c.aesthetic_min);
  j["iqa_enabled"] = c.iqa_enabled;
  j["dense_ocr_min_side"] = detail::opt_json(c.dense_ocr_min_side);
  j["border_enabled"] = c.border_enabled;
  j["border_fraction_max"] = c.border_fraction_max;
  j["rebalance_enabled"] = c.rebalance_enabled;
  j["artimuse_min"] = detail::opt_json(c.artimuse_min);
  j["semantic_dedup_tau"] = detail::opt_json(c.semantic_dedup_tau);
  j["cascade"] = to_json(c.cascade);
  return j;
}

/// Overlays `j` on the default config of the stage it names.
inline StageConfig stage_config_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("stage")) throw Error(ErrorCode::Config, "stage config needs a 'stage' key");
    StageConfig c = default_stage_config(j["stage"].get<int>());
    if (j.contains("min_side")) c.min_side = j["min_side"].get<std::int64_t>();
    detail::read_opt(j, "aesthetic_min", c.aesthetic_min);
    if (j.contains("iqa_enabled")) c.iqa_enabled = j["iqa_enabled"].get<bool>();
    detail::read_opt(j, "dense_ocr_min_side", c.dense_ocr_min_side);
    if (j.contains("border_enabled")) c.border_enabled = j["border_enabled"].get<bool>();
    if (j.contains("border_fraction_max")) c.border_fraction_max = j["border_fraction_max"].get<double>();
    if (j.contains("rebalance_enabled")) c.rebalance_enabled = j["rebalance_enabled"].get<bool>();
    detail::read_opt(j, "artimuse_min", c.artimuse_min);
    detail::read_opt(j, "semantic_dedup_tau", c.semantic_dedup_tau);
    if (j.contains("cascade")) cascade_from_json(j["cascade"], c.cascade);
    validate_thresholds(c.cascade);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, e.what());
  }
}

/// Stage config file: {"stages": [ {...}, ... ]} or a single stage object.
inline std::vector<StageConfig> load_stage_configs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open stage config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
  std::vector<StageConfig> out;
  if (j.contains("stages")) {
    for (const auto& s : j["stages"]) out.push_back(stage_config_from_json(s));
  } else {
    out.push_back(stage_config_from_json(j));
  }
  return out;
}

}  // namespace curate
