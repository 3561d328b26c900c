#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "curate/cascade.hpp"
#include "curate/content_filter.hpp"
#include "curate/dedup.hpp"
#include "curate/error.hpp"
#include "curate/parallel.hpp"
#include "curate/sample.hpp"
#include "curate/scorer.hpp"
#include "curate/stage_config.hpp"

namespace curate {

/// Resolution, safety and score gates applied before any image analysis.
/// Throws MissingScore when a configured threshold's score is absent.
inline FilterDecision evaluate_basic(const SampleRecord& r, const StageConfig& cfg) {
  const int st = cfg.stage;
  if (r.broken) return FilterDecision::reject(RejectReason::Broken, st);
  if (r.nsfw) return FilterDecision::reject(RejectReason::Nsfw, st);
  if (r.min_side() <= cfg.min_side) return FilterDecision::reject(RejectReason::TooSmall, st);
  if (r.dense_text && cfg.dense_ocr_min_side && r.min_side() <= *cfg.dense_ocr_min_side)
    return FilterDecision::reject(RejectReason::DenseTextTooSmall, st);
  if (cfg.aesthetic_min) {
    if (!r.aesthetic_score) throw Error(ErrorCode::MissingScore, "aesthetic_score of '" + r.id + "'");
    if (*r.aesthetic_score < *cfg.aesthetic_min) return FilterDecision::reject(RejectReason::LowAesthetic, st);
  }
  if (cfg.artimuse_min) {
    if (!r.artimuse_score) throw Error(ErrorCode::MissingScore, "artimuse_score of '" + r.id + "'");
    if (*r.artimuse_score < *cfg.artimuse_min) return FilterDecision::reject(RejectReason::LowArtimuse, st);
  }
  return FilterDecision::accept(st);
}

/// One line of the rejection report.
struct RejectionEntry {
  std::string id;
  std::string stage;  // "1", "2", "3", "caption-qa", "rebalance"
  RejectReason reason = RejectReason::None;
  nlohmann::ordered_json detail;  // null, a category string, or a structured report

  bool operator==(const RejectionEntry&) const = default;
};

inline nlohmann::ordered_json to_json(const RejectionEntry& e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["stage"] = e.stage;
  j["reason"] = to_string(e.reason);
  j["detail"] = e.detail;
  return j;
}

struct StageResult {
  std::vector<SampleRecord> accepted;
  std::vector<RejectionEntry> rejections;  // input order
  std::map<std::string, std::size_t> reason_counts;
  std::size_t input = 0;
  std::size_t recovered = 0;  // accepted through the relaxed branch
};

struct StageOptions {
  std::size_t workers = 1;
};

/// Decision for one record before deduplication.
inline FilterDecision evaluate_record(const SampleRecord& r, const StageConfig& cfg, const CaptionRuleSet& rules,
                                      const QualityScorer* scorer, std::mutex* scorer_mu) {
  const int st = cfg.stage;
  if (auto v = validate_record(r); !v.empty()) return FilterDecision::reject(RejectReason::Invalid, st, v.front());
  try {
    if (auto d = evaluate_basic(r, cfg); !d.accepted()) return d;
  } catch (const Error& e) {
    return FilterDecision::reject(RejectReason::MissingScore, st, e.what());
  }
  if (auto d = caption_content_filter(r.captions, rules); !d.accepted()) {
    d.stage = st;
    return d;
  }
  if (!cfg.iqa_enabled && !cfg.border_enabled) return FilterDecision::accept(st);
  if (scorer == nullptr) return FilterDecision::reject(RejectReason::ScorerError, st, "no quality scorer configured");

  QualityEvidence ev;
  try {
    if (scorer_mu) {
      std::lock_guard lock(*scorer_mu);
      ev = scorer->score(r);
    } else {
      ev = scorer->score(r);
    }
  } catch (const std::exception& e) {
    return FilterDecision::reject(RejectReason::ScorerError, st, e.what());
  }

  FilterDecision d = FilterDecision::accept(st);
  if (cfg.iqa_enabled) {
    d = evaluate_cascade(ev.stats, ev.perceptual, cfg.cascade);
    d.stage = st;
    if (!d.accepted()) return d;
  }
  if (cfg.border_enabled && ev.border.border_fraction > cfg.border_fraction_max)
    return FilterDecision::reject(RejectReason::Bordered, st);
  return d;
}

/// Runs one filtering stage: basic gates, caption content rules, and (when
/// enabled) the quality cascade and border check; then deduplication.
///
/// Duplicate groups are formed over the whole stage input and the keeper is
/// the earliest member in input order. A record that passes every filter but
/// is not its group's keeper is rejected as Duplicate. Because keeper status
/// does not depend on which other records pass, a stricter config never
/// accepts a record that a looser one rejects.
inline StageResult run_stage(std::span<const SampleRecord> records, const StageConfig& cfg,
                             const QualityScorer* scorer, const CaptionRuleSet& rules = {},
                             StageOptions opts = {}) {
  validate_thresholds(cfg.cascade);
  const std::size_t n = records.size();
  std::mutex scorer_mu;
  std::mutex* mu = (scorer && !scorer->concurrent_safe()) ? &scorer_mu : nullptr;

  std::vector<FilterDecision> decisions(n);
  parallel_for(n, opts.workers,
               [&](std::size_t i) { decisions[i] = evaluate_record(records[i], cfg, rules, scorer, mu); });

  std::vector<bool> dup = non_keeper_mask(dedup_exact(records), n);
  std::vector<std::string> dup_detail(n);
  for (std::size_t i = 0; i < n; ++i)
    if (dup[i]) dup_detail[i] = "exact";
  if (cfg.semantic_dedup_tau) {
    // Records without an embedding (or with an odd dimension) are not
    // semantically deduplicated.
    std::vector<std::size_t> idx;
    std::vector<const std::vector<double>*> embs;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& e = records[i].embedding;
      if (!e || e->empty() || (!embs.empty() && e->size() != embs.front()->size())) continue;
      idx.push_back(i);
      embs.push_back(&*e);
    }
    const auto sem = non_keeper_mask(link_groups(embs, *cfg.semantic_dedup_tau, opts.workers), embs.size());
    for (std::size_t k = 0; k < embs.size(); ++k)
      if (sem[k] && !dup[idx[k]]) {
        dup[idx[k]] = true;
        dup_detail[idx[k]] = "semantic";
      }
  }

  StageResult out;
  out.input = n;
  const std::string stage_label = std::to_string(cfg.stage);
  for (std::size_t i = 0; i < n; ++i) {
    FilterDecision& d = decisions[i];
    if (d.accepted() && dup[i]) d = FilterDecision::reject(RejectReason::Duplicate, cfg.stage, dup_detail[i]);
    if (d.accepted()) {
      if (d.verdict == Verdict::AcceptRecovered) ++out.recovered;
      out.accepted.push_back(records[i]);
    } else {
      ++out.reason_counts[std::string(to_string(d.reason))];
      nlohmann::ordered_json detail = d.detail.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(d.detail);
      out.rejections.push_back({records[i].id, stage_label, d.reason, std::move(detail)});
    }
  }
  return out;
}

}  // namespace curate
