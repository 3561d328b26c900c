#pragma once

#include <array>
#include <vector>

#include "curate/cascade.hpp"

namespace fixtures {

struct CascadeCase {
  bool dark, hard_fail, stat_pass, perceptual_pass, relaxed_saturated;
  curate::StatIndicators stats;
  curate::PerceptualScores perceptual;
};

/// The branch each flag combination must reach, read straight off the rule
/// order: dark, hard fail, full pass, recovery, reject.
inline curate::FilterDecision expected_branch(const CascadeCase& c) {
  using curate::FilterDecision;
  using curate::RejectReason;
  if (c.dark) return FilterDecision::reject(RejectReason::TooDark);
  if (c.hard_fail) return FilterDecision::reject(RejectReason::HardFail);
  if (c.stat_pass && c.perceptual_pass) return FilterDecision::accept();
  if (c.relaxed_saturated) return FilterDecision::recovered();
  return FilterDecision::reject(RejectReason::CascadeFail);
}

/// All 32 combinations realised as concrete values against the default
/// thresholds. Each flag is driven by its own field so flags are independent:
///   dark              brightness 0.03 instead of 0.5
///   hard fail         sharpness 2.5 (above the abnormal bound, still a stat pass)
///   stat pass         entropy 5.0 instead of 2.0
///   perceptual pass   (4, 0.7, 60) instead of the relaxed-only (7, 0.45, 40)
///   relaxed+saturated saturation 0.3; when false, saturation 0.05 if the
///                     strict scores pass, otherwise NIQE 9 fails relaxed
inline std::vector<CascadeCase> cascade_truth_table() {
  std::vector<CascadeCase> out;
  for (unsigned m = 0; m < 32; ++m) {
    CascadeCase c{bool(m & 1), bool(m & 2), bool(m & 4), bool(m & 8), bool(m & 16), {}, {}};
    c.stats.brightness = c.dark ? 0.03 : 0.5;
    c.stats.sharpness_variance = c.hard_fail ? 2.5 : 0.01;
    c.stats.entropy = c.stat_pass ? 5.0 : 2.0;
    c.perceptual = c.perceptual_pass ? curate::PerceptualScores{4.0, 0.7, 60.0} : curate::PerceptualScores{7.0, 0.45, 40.0};
    if (c.relaxed_saturated) {
      c.stats.saturation = 0.3;
    } else if (c.perceptual_pass) {
      c.stats.saturation = 0.05;
    } else {
      c.stats.saturation = 0.3;
      c.perceptual.niqe = 9.0;
    }
    out.push_back(c);
  }
  return out;
}

/// Independent check that a case's values really realise its flags under the
/// default thresholds (written against the numbers, not the library).
inline bool flags_hold(const CascadeCase& c) {
  const auto& s = c.stats;
  const auto& p = c.perceptual;
  const bool dark = s.brightness < 0.05;
  const bool abnormal = s.brightness < 0.02 || s.brightness > 0.995 || s.entropy < 0.5 || s.saturation < 0.0 ||
                        s.sharpness_variance < 0.0 || s.sharpness_variance > 2.0;
  const bool hard = p.niqe > 12.0 || abnormal;
  const bool stat = s.brightness >= 0.1 && s.brightness <= 0.95 && s.entropy >= 3.0 && s.saturation >= 0.02 &&
                    s.sharpness_variance >= 1e-4;
  const bool perc = p.niqe <= 6.0 && p.clip_iqa >= 0.5 && p.musiq >= 45.0;
  const bool relaxed = p.niqe <= 8.0 && p.clip_iqa >= 0.4 && p.musiq >= 35.0;
  const bool rs = s.saturation >= 0.15 && relaxed;
  // A dark image fails the stat bounds too; the stat flag is only meaningful
  // for non-dark cases.
  return dark == c.dark && hard == c.hard_fail && (c.dark || stat == c.stat_pass) && perc == c.perceptual_pass &&
         rs == c.relaxed_saturated;
}

}  // namespace fixtures
