#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "curate/caption_qa.hpp"
#include "curate/content_filter.hpp"
#include "curate/error.hpp"
#include "curate/rebalance.hpp"
#include "curate/report.hpp"
#include "curate/sample.hpp"
#include "curate/scorer.hpp"
#include "curate/stage.hpp"
#include "curate/stage_config.hpp"
#include "curate/taxonomy.hpp"

namespace curate {

struct TaxonomyConfig {
  TagTree tree;
  TagEmbeddings vocab;
  std::size_t top_k = 1000;
  std::size_t diversity_target = 10;
};

struct PipelineConfig {
  std::string input;
  std::string output_dir;
  std::array<StageConfig, 3> stages = default_curriculum();
  CaptionRuleSet rules = default_caption_rules();
  std::shared_ptr<const QualityScorer> scorer = std::make_shared<SyntheticScorer>(0);
  FidelityMode fidelity_mode = FidelityMode::DropRecord;
  std::optional<TaxonomyConfig> taxonomy;
  RebalanceSchedule schedule;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

namespace detail {

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path q(p);
  return (q.is_relative() ? base / q : q).lexically_normal().string();
}

inline std::string existing(const std::filesystem::path& base, const std::string& p, const char* what) {
  const std::string r = resolve(base, p);
  if (!std::filesystem::exists(r)) throw Error(ErrorCode::Config, std::string(what) + " not found: " + r);
  return r;
}

}  // namespace detail

/// Builds a config from JSON. Relative paths resolve against `base`. Every
/// referenced file is loaded here, so a bad path or file fails before the
/// pipeline writes anything. The seed is mandatory.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  PipelineConfig c;
  try {
    if (!j.contains("seed")) throw Error(ErrorCode::Config, "pipeline config needs an explicit 'seed'");
    c.seed = j["seed"].get<std::uint64_t>();
    c.workers = j.value("workers", std::size_t{1});
    if (j.contains("input")) c.input = detail::existing(base, j["input"].get<std::string>(), "input manifest");
    if (j.contains("output_dir")) c.output_dir = detail::resolve(base, j["output_dir"].get<std::string>());

    if (j.contains("stages")) {
      const auto& s = j["stages"];
      std::vector<StageConfig> list;
      if (s.is_string()) {
        list = load_stage_configs(detail::existing(base, s.get<std::string>(), "stage config"));
      } else {
        for (const auto& e : s) list.push_back(stage_config_from_json(e));
      }
      for (auto& sc : list) {
        if (sc.stage < 1 || sc.stage > 3) throw Error(ErrorCode::Config, "stage must be 1, 2 or 3");
        c.stages[static_cast<std::size_t>(sc.stage - 1)] = sc;
      }
    }
    if (j.contains("caption_rules") && !j["caption_rules"].is_null())
      c.rules = load_caption_rules(detail::existing(base, j["caption_rules"].get<std::string>(), "caption rules"));

    if (j.contains("scorer")) {
      const auto& s = j["scorer"];
      const std::string kind = s.value("kind", std::string("synthetic"));
      if (kind == "synthetic") {
        c.scorer = std::make_shared<SyntheticScorer>(s.value("salt", std::uint64_t{0}));
      } else if (kind == "table") {
        const std::string scores = detail::existing(base, s.at("path").get<std::string>(), "scores file");
        const std::string root = detail::resolve(base, s.value("image_root", std::string{}));
        c.scorer = std::make_shared<TableScorer>(TableScorer::load(scores, root.empty() ? base : std::filesystem::path(root)));
      } else {
        throw Error(ErrorCode::Config, "unknown scorer kind '" + kind + "'");
      }
    }

    if (j.contains("caption_qa")) {
      const std::string mode = j["caption_qa"].value("mode", std::string("drop_record"));
      if (mode == "drop_record") c.fidelity_mode = FidelityMode::DropRecord;
      else if (mode == "drop_caption") c.fidelity_mode = FidelityMode::DropCaption;
      else throw Error(ErrorCode::Config, "unknown caption_qa mode '" + mode + "'");
    }

    if (j.contains("taxonomy") && !j["taxonomy"].is_null()) {
      const auto& t = j["taxonomy"];
      TaxonomyConfig tc;
      tc.tree = load_tag_tree(detail::existing(base, t.at("tree").get<std::string>(), "tag tree"));
      tc.vocab = load_tag_embeddings(detail::existing(base, t.at("tag_embeddings").get<std::string>(), "tag embeddings"));
      tc.top_k = t.value("top_k", tc.top_k);
      tc.diversity_target = t.value("diversity_target", tc.diversity_target);
      if (tc.top_k < 1 || tc.diversity_target < 1) throw Error(ErrorCode::Config, "top_k and diversity_target must be >= 1");
      for (const auto& id : tc.vocab.ids) {
        const std::size_t i = tc.tree.index_of(id);
        if (i == TagTree::npos || !tc.tree.is_leaf(i))
          throw Error(ErrorCode::Config, "tag embedding '" + id + "' is not a leaf of the tag tree");
      }
      c.taxonomy = std::move(tc);
    }
    if (j.contains("schedule")) c.schedule = schedule_from_json(j["schedule"]);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("pipeline config: ") + e.what());
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::Config) throw;
    throw Error(ErrorCode::Config, e.what());
  }
  if (c.stages[2].rebalance_enabled && !c.taxonomy)
    throw Error(ErrorCode::Config, "stage 3 rebalancing needs a 'taxonomy' section");
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open pipeline config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
  return pipeline_config_from_json(j, std::filesystem::absolute(path).parent_path());
}

/// Tags of one record: top-K by cosine, then adaptive diversity sampling.
inline std::vector<std::string> tag_record(const std::vector<double>& embedding, const TaxonomyConfig& tax) {
  return diversity_sample(tag_topk(embedding, tax.vocab, tax.top_k), tax.tree, tax.diversity_target);
}

struct TaggingFailure {
  std::size_t index;
  std::string message;
};

/// Tags every record that carries an embedding. Records without one get no
/// assignment; records whose embedding cannot be tagged are listed in
/// `failures` (when given) instead of aborting the run.
inline std::vector<TagAssignment> tag_records(std::span<const SampleRecord> records, const TaxonomyConfig& tax,
                                              std::size_t workers = 1,
                                              std::vector<TaggingFailure>* failures = nullptr) {
  struct Tagged {
    std::vector<std::string> tags;
    std::string error;
  };
  auto tagged = parallel_map<Tagged>(records.size(), workers, [&](std::size_t i) -> Tagged {
    const auto& e = records[i].embedding;
    if (!e) return {};
    try {
      return {tag_record(*e, tax), {}};
    } catch (const Error& err) {
      if (!failures) throw;
      return {{}, err.what()};
    }
  });
  std::vector<TagAssignment> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].embedding) continue;
    if (!tagged[i].error.empty()) failures->push_back({i, std::move(tagged[i].error)});
    else out.push_back({records[i].id, std::move(tagged[i].tags)});
  }
  return out;
}

struct RebalanceOutcome {
  std::vector<SampleRecord> kept;  // emission order, then untagged records in input order
  std::vector<RejectionEntry> rejections;
  std::vector<TagAssignment> assignments;
  RebalancePlan plan;
};

inline RebalanceOutcome rebalance_records(std::span<const SampleRecord> records, const TaxonomyConfig& tax,
                                          const RebalanceSchedule& sched, std::uint64_t seed, std::size_t workers = 1) {
  RebalanceOutcome out;
  std::vector<TaggingFailure> failures;
  out.assignments = tag_records(records, tax, workers, &failures);
  out.plan = plan_rebalance(build_histogram(out.assignments), sched);
  const auto emitted = execute_rebalance(streams_from(out.assignments), out.plan, seed);

  std::unordered_map<std::string_view, std::size_t> pos;
  for (std::size_t i = 0; i < records.size(); ++i) pos.emplace(records[i].id, i);
  std::vector<bool> settled(records.size(), false);
  for (const auto& f : failures) settled[f.index] = true;
  for (const auto& e : emitted) {
    const std::size_t i = pos.at(e.sample_id);
    settled[i] = true;
    out.kept.push_back(records[i]);
  }
  std::size_t next_failure = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (next_failure < failures.size() && failures[next_failure].index == i) {
      out.rejections.push_back({records[i].id, "rebalance", RejectReason::Invalid, failures[next_failure++].message});
      continue;
    }
    if (settled[i]) continue;
    if (!records[i].embedding) out.kept.push_back(records[i]);
    else out.rejections.push_back({records[i].id, "rebalance", RejectReason::NotSampled, nullptr});
  }
  return out;
}

struct PipelineResult {
  Manifest manifest;
  std::vector<StageReport> reports;
  std::vector<RejectionEntry> rejections;
  std::optional<RebalancePlan> plan;
  std::vector<TagAssignment> assignments;
};

/// Stage 1 -> 2 -> 3 filtering, caption fidelity, then (when stage 3 asks
/// for it) taxonomy rebalancing. Edit triplets skip the sample filters and
/// are appended to the output after the samples. Manifest parse errors are
/// reported as rejections and never abort.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const Manifest& input,
                                   const std::vector<ParseError>& parse_errors = {}) {
  using Clock = std::chrono::steady_clock;
  auto seconds_since = [](Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  PipelineResult out;
  for (const auto& e : parse_errors) {
    nlohmann::ordered_json d;
    d["line"] = e.line;
    d["code"] = to_string(e.code);
    d["message"] = e.message;
    out.rejections.push_back({"", "input", RejectReason::Invalid, std::move(d)});
  }

  std::vector<SampleRecord> records;
  std::vector<EditTriplet> triplets;
  for (const auto& r : input.records) {
    if (const auto* s = std::get_if<SampleRecord>(&r)) records.push_back(*s);
    else triplets.push_back(std::get<EditTriplet>(r));
  }

  const StageOptions opts{cfg.workers};
  for (const auto& sc : cfg.stages) {
    const auto t0 = Clock::now();
    StageResult res = run_stage(records, sc, cfg.scorer.get(), cfg.rules, opts);
    out.reports.push_back(make_report(std::to_string(sc.stage), res.input, res.accepted.size(), res.reason_counts));
    out.reports.back().wall_seconds = seconds_since(t0);
    for (auto& r : res.rejections) out.rejections.push_back(std::move(r));
    records = std::move(res.accepted);
  }

  {
    const auto t0 = Clock::now();
    const std::size_t n = records.size();
    FidelityResult fr = filter_by_fidelity(records, cfg.fidelity_mode, nullptr, cfg.workers);
    std::map<std::string, std::size_t> reasons;
    if (!fr.rejected.empty()) reasons[std::string(to_string(RejectReason::CaptionFidelity))] = fr.rejected.size();
    for (const auto& rej : fr.rejected)
      out.rejections.push_back({rej.record.id, "caption-qa", RejectReason::CaptionFidelity, to_json(rej)});
    out.reports.push_back(make_report("caption-qa", n, fr.kept.size(), std::move(reasons)));
    out.reports.back().wall_seconds = seconds_since(t0);
    records = std::move(fr.kept);
  }

  if (cfg.stages[2].rebalance_enabled && cfg.taxonomy) {
    const auto t0 = Clock::now();
    const std::size_t n = records.size();
    RebalanceOutcome rb = rebalance_records(records, *cfg.taxonomy, cfg.schedule, cfg.seed, cfg.workers);
    std::map<std::string, std::size_t> reasons;
    for (const auto& e : rb.rejections) ++reasons[std::string(to_string(e.reason))];
    out.reports.push_back(make_report("rebalance", n, rb.kept.size(), std::move(reasons)));
    out.reports.back().wall_seconds = seconds_since(t0);
    for (auto& r : rb.rejections) out.rejections.push_back(std::move(r));
    out.plan = std::move(rb.plan);
    out.assignments = std::move(rb.assignments);
    records = std::move(rb.kept);
  }

  for (auto& r : records) out.manifest.records.emplace_back(std::move(r));
  for (auto& t : triplets) out.manifest.records.emplace_back(std::move(t));
  return out;
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + p.string());
  f << text;
  if (!f) throw Error(ErrorCode::Io, "write failed: " + p.string());
}

/// Writes manifest.jsonl, reports.jsonl, summary.txt, rejections.jsonl and,
/// after rebalancing, plan.jsonl and tags.jsonl.
inline void write_pipeline_outputs(const PipelineResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

  write_text_file(dir / "manifest.jsonl", write_manifest(r.manifest));
  std::ostringstream reports;
  write_reports(r.reports, reports);
  write_text_file(dir / "reports.jsonl", reports.str());
  write_text_file(dir / "summary.txt", summary_text(r.reports));
  std::ostringstream rej;
  for (const auto& e : r.rejections) rej << to_json(e).dump() << '\n';
  write_text_file(dir / "rejections.jsonl", rej.str());
  if (r.plan) {
    std::ostringstream plan;
    write_plan(*r.plan, plan);
    write_text_file(dir / "plan.jsonl", plan.str());
    std::ostringstream tags;
    for (const auto& a : r.assignments) tags << to_json(a).dump() << '\n';
    write_text_file(dir / "tags.jsonl", tags.str());
  }
}

inline ParseResult read_manifest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + path);
  return parse_manifest(in);
}

/// Loads the input, runs every stage and writes the outputs. Nothing is
/// written unless the input could be read.
inline PipelineResult run_pipeline_files(const PipelineConfig& cfg) {
  if (cfg.input.empty()) throw Error(ErrorCode::Config, "no input manifest configured");
  if (cfg.output_dir.empty()) throw Error(ErrorCode::Config, "no output directory configured");
  const ParseResult in = read_manifest_file(cfg.input);
  PipelineResult r = run_pipeline(cfg, in.manifest, in.errors);
  write_pipeline_outputs(r, cfg.output_dir);
  return r;
}

}  // namespace curate
