#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "curate/error.hpp"
#include "curate/stat_metrics.hpp"

namespace curate {

/// Scores from the learned quality models.
struct PerceptualScores {
  double niqe = 0.0;      // >= 0, lower is better
  double clip_iqa = 0.0;  // [0, 1], higher is better
  double musiq = 0.0;     // [0, 100], higher is better

  bool operator==(const PerceptualScores&) const = default;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval; infinite ends mean unbounded.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double v) const { return v >= lo && v <= hi; }
  bool covers(const Interval& o) const { return lo <= o.lo && hi >= o.hi; }
  bool operator==(const Interval&) const = default;
};

struct StatBounds {
  Interval brightness;
  Interval entropy;
  Interval saturation;
  Interval sharpness_variance;

  bool contains(const StatIndicators& s) const {
    return brightness.contains(s.brightness) && entropy.contains(s.entropy) && saturation.contains(s.saturation) &&
           sharpness_variance.contains(s.sharpness_variance);
  }
  bool covers(const StatBounds& o) const {
    return brightness.covers(o.brightness) && entropy.covers(o.entropy) && saturation.covers(o.saturation) &&
           sharpness_variance.covers(o.sharpness_variance);
  }
  bool operator==(const StatBounds&) const = default;
};

struct PerceptualBounds {
  double niqe_max = kInf;
  double clip_iqa_min = -kInf;
  double musiq_min = -kInf;

  bool contains(const PerceptualScores& p) const {
    return p.niqe <= niqe_max && p.clip_iqa >= clip_iqa_min && p.musiq >= musiq_min;
  }
  /// Everything inside `o` is also inside *this.
  bool covers(const PerceptualBounds& o) const {
    return niqe_max >= o.niqe_max && clip_iqa_min <= o.clip_iqa_min && musiq_min <= o.musiq_min;
  }
  bool operator==(const PerceptualBounds&) const = default;
};

/// Thresholds of the cascaded statistical/perceptual decision. The defaults
/// are tuning knobs; `stat_abnormal` in particular is a placeholder for what
/// counts as severely abnormal statistics.
struct CascadeThresholds {
  double brightness_skip_max = 0.05;
  StatBounds stat_pass{{0.1, 0.95}, {3.0, kInf}, {0.02, kInf}, {1e-4, kInf}};
  PerceptualBounds perceptual_pass{6.0, 0.5, 45.0};
  PerceptualBounds perceptual_relaxed{8.0, 0.4, 35.0};
  double saturation_recovery_min = 0.15;
  double niqe_hard_max = 12.0;
  StatBounds stat_abnormal{{0.02, 0.995}, {0.5, kInf}, {0.0, kInf}, {0.0, 2.0}};

  bool operator==(const CascadeThresholds&) const = default;
};

inline void validate_thresholds(const CascadeThresholds& t) {
  if (!t.perceptual_relaxed.covers(t.perceptual_pass))
    throw Error(ErrorCode::InvalidThresholds, "perceptual_relaxed must dominate perceptual_pass");
}

enum class Verdict : std::uint8_t { Accept, AcceptRecovered, Reject };

enum class RejectReason : std::uint8_t {
  None,
  Invalid,
  Broken,
  Nsfw,
  TooSmall,
  DenseTextTooSmall,
  LowAesthetic,
  LowArtimuse,
  MissingScore,
  ContentMatch,
  TooDark,
  HardFail,
  CascadeFail,
  Bordered,
  ScorerError,
  Duplicate,
  CaptionFidelity,
  NotSampled,
};

constexpr std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Accept: return "accept";
    case Verdict::AcceptRecovered: return "accept_recovered";
    case Verdict::Reject: return "reject";
  }
  return "reject";
}

constexpr std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::Invalid: return "invalid";
    case RejectReason::Broken: return "broken";
    case RejectReason::Nsfw: return "nsfw";
    case RejectReason::TooSmall: return "too_small";
    case RejectReason::DenseTextTooSmall: return "dense_text_too_small";
    case RejectReason::LowAesthetic: return "low_aesthetic";
    case RejectReason::LowArtimuse: return "low_artimuse";
    case RejectReason::MissingScore: return "missing_score";
    case RejectReason::ContentMatch: return "content_match";
    case RejectReason::TooDark: return "too_dark";
    case RejectReason::HardFail: return "hard_fail";
    case RejectReason::CascadeFail: return "cascade_fail";
    case RejectReason::Bordered: return "bordered";
    case RejectReason::ScorerError: return "scorer_error";
    case RejectReason::Duplicate: return "duplicate";
    case RejectReason::CaptionFidelity: return "caption_fidelity";
    case RejectReason::NotSampled: return "not_sampled";
  }
  return "none";
}

struct FilterDecision {
  Verdict verdict = Verdict::Accept;
  RejectReason reason = RejectReason::None;
  int stage = 0;
  std::string detail;  // e.g. the matched content category

  bool accepted() const { return verdict != Verdict::Reject; }

  static FilterDecision accept(int stage = 0) { return {Verdict::Accept, RejectReason::None, stage, {}}; }
  static FilterDecision recovered(int stage = 0) { return {Verdict::AcceptRecovered, RejectReason::None, stage, {}}; }
  static FilterDecision reject(RejectReason r, int stage = 0, std::string detail = {}) {
    return {Verdict::Reject, r, stage, std::move(detail)};
  }

  bool operator==(const FilterDecision&) const = default;
};

/// The cascaded decision, first matching rule wins:
///   1. too dark                                   -> Reject(TooDark)
///   2. NIQE above hard max or abnormal statistics -> Reject(HardFail)
///   3. statistical and perceptual pass            -> Accept
///   4. saturated enough and relaxed perceptual    -> AcceptRecovered
///   5. otherwise                                  -> Reject(CascadeFail)
inline FilterDecision evaluate_cascade(const StatIndicators& s, const PerceptualScores& p,
                                       const CascadeThresholds& t) {
  validate_thresholds(t);
  if (s.brightness < t.brightness_skip_max) return FilterDecision::reject(RejectReason::TooDark);
  if (p.niqe > t.niqe_hard_max || !t.stat_abnormal.contains(s)) return FilterDecision::reject(RejectReason::HardFail);
  if (t.stat_pass.contains(s) && t.perceptual_pass.contains(p)) return FilterDecision::accept();
  if (s.saturation >= t.saturation_recovery_min && t.perceptual_relaxed.contains(p))
    return FilterDecision::recovered();
  return FilterDecision::reject(RejectReason::CascadeFail);
}

}  // namespace curate
