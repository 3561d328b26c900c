#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "curate/curate.hpp"

namespace {

using namespace curate;
using nlohmann::ordered_json;

struct Common {
  std::string config;
  std::string input;
  std::string output;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

void add_common(CLI::App* cmd, Common& c, bool needs_seed) {
  cmd->add_option("--config", c.config, "Config file");
  cmd->add_option("--input", c.input, "Input file");
  cmd->add_option("--output", c.output, "Output file ('-' for stdout)");
  auto* seed = cmd->add_option("--seed", c.seed, "Random seed");
  if (needs_seed) seed->required();
  cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
}

std::string require(const std::string& v, const char* flag) {
  if (v.empty()) throw Error(ErrorCode::Config, std::string(flag) + " is required");
  return v;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw Error(ErrorCode::Io, "cannot write " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    if (file_ && !(file_->flush())) throw Error(ErrorCode::Io, "write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

// Text is assembled first so a failure leaves no partial output behind.
void emit(const std::string& path, const std::string& text) {
  Output out(path);
  out.stream() << text;
  out.close();
}

void write_jsonl(const std::string& path, const std::vector<ordered_json>& lines) {
  std::ostringstream s;
  for (const auto& l : lines) s << l.dump() << '\n';
  emit(path, s.str());
}

ParseResult read_manifest_or_stdin(const std::string& path) {
  if (path.empty() || path == "-") return parse_manifest(std::cin);
  return read_manifest_file(path);
}

void report_parse_errors(const std::vector<ParseError>& errors) {
  for (const auto& e : errors)
    std::cerr << "line " << e.line << ": " << to_string(e.code) << ": " << e.message << '\n';
}

std::vector<std::string> read_id_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (!t.empty() && t.front() != '#') ids.emplace_back(t);
  }
  return ids;
}

std::string write_id_list(const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) s += id + '\n';
  return s;
}

Manifest with_triplets(std::vector<SampleRecord> samples, const Manifest& original) {
  Manifest m = manifest_of(std::move(samples));
  for (const auto& r : original.records)
    if (std::holds_alternative<EditTriplet>(r)) m.records.push_back(r);
  return m;
}

// ---------------------------------------------------------------------------

struct FilterArgs {
  Common c;
  int stage = 1;
  std::string rules;
  std::string scorer = "synthetic";
  std::string scores;
  std::string image_root;
  std::string rejections;
};

int cmd_filter(const FilterArgs& a) {
  StageConfig cfg = default_stage_config(a.stage);
  if (!a.c.config.empty())
    for (const auto& sc : load_stage_configs(a.c.config))
      if (sc.stage == a.stage) cfg = sc;
  const CaptionRuleSet rules = a.rules.empty() ? default_caption_rules() : load_caption_rules(a.rules);
  std::unique_ptr<QualityScorer> scorer;
  if (a.scorer == "synthetic") scorer = std::make_unique<SyntheticScorer>(a.c.seed);
  else if (a.scorer == "table") scorer = std::make_unique<TableScorer>(TableScorer::load(require(a.scores, "--scores"), a.image_root));
  else throw Error(ErrorCode::Config, "unknown scorer '" + a.scorer + "'");

  const ParseResult in = read_manifest_or_stdin(a.c.input);
  report_parse_errors(in.errors);
  const auto t0 = std::chrono::steady_clock::now();
  StageResult res = run_stage(samples_of(in.manifest), cfg, scorer.get(), rules, {a.c.workers});
  StageReport rep = make_report(std::to_string(cfg.stage), res.input, res.accepted.size(), res.reason_counts);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string manifest = write_manifest(with_triplets(std::move(res.accepted), in.manifest));
  if (!a.rejections.empty()) {
    std::vector<ordered_json> lines;
    for (const auto& e : res.rejections) lines.push_back(to_json(e));
    write_jsonl(a.rejections, lines);
  }
  emit(a.c.output, manifest);
  write_summary({rep}, std::cerr, true);
  return 0;
}

struct CaptionQaArgs {
  Common c;
  std::string mode = "drop_record";
  std::string rejections;
};

int cmd_caption_qa(const CaptionQaArgs& a) {
  FidelityMode mode;
  if (a.mode == "drop_record") mode = FidelityMode::DropRecord;
  else if (a.mode == "drop_caption") mode = FidelityMode::DropCaption;
  else throw Error(ErrorCode::Config, "unknown mode '" + a.mode + "'");

  const ParseResult in = read_manifest_or_stdin(a.c.input);
  report_parse_errors(in.errors);
  const auto samples = samples_of(in.manifest);
  FidelityResult fr = filter_by_fidelity(samples, mode, nullptr, a.c.workers);
  const std::size_t rejected = fr.rejected.size();
  const std::string manifest = write_manifest(with_triplets(std::move(fr.kept), in.manifest));
  if (!a.rejections.empty()) {
    std::vector<ordered_json> lines;
    for (const auto& r : fr.rejected)
      lines.push_back(to_json(RejectionEntry{r.record.id, "caption-qa", RejectReason::CaptionFidelity, to_json(r)}));
    write_jsonl(a.rejections, lines);
  }
  emit(a.c.output, manifest);
  std::map<std::string, std::size_t> reasons;
  if (rejected) reasons["caption_fidelity"] = rejected;
  write_summary({make_report("caption-qa", samples.size(), samples.size() - rejected, reasons)}, std::cerr);
  return 0;
}

struct TagArgs {
  Common c;
  std::string tree;
  std::string embeddings;
  std::size_t top_k = 1000;
  std::size_t target = 10;
};

int cmd_tag(const TagArgs& a) {
  TaxonomyConfig tax{load_tag_tree(a.tree), load_tag_embeddings(a.embeddings), a.top_k, a.target};
  const ParseResult in = read_manifest_or_stdin(a.c.input);
  report_parse_errors(in.errors);
  std::vector<TaggingFailure> failures;
  const auto samples = samples_of(in.manifest);
  const auto assignments = tag_records(samples, tax, a.c.workers, &failures);
  for (const auto& f : failures) std::cerr << samples[f.index].id << ": " << f.message << '\n';
  std::vector<ordered_json> lines;
  for (const auto& x : assignments) lines.push_back(to_json(x));
  write_jsonl(a.c.output, lines);
  return 0;
}

int cmd_rebalance_plan(const Common& c) {
  RebalanceSchedule sched;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + c.config);
    try {
      sched = schedule_from_json(nlohmann::json::parse(in, nullptr, true, true));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Config, e.what());
    }
  }
  const auto assignments = load_assignments(require(c.input, "--input"));
  std::ostringstream s;
  write_plan(plan_rebalance(build_histogram(assignments), sched), s);
  emit(c.output, s.str());
  return 0;
}

struct ExecArgs {
  Common c;
  std::string plan;
  std::string manifest;
};

int cmd_rebalance_exec(const ExecArgs& a) {
  const auto assignments = load_assignments(require(a.c.input, "--input"));
  std::ifstream pin(require(a.plan, "--plan"));
  if (!pin) throw Error(ErrorCode::Io, "cannot open " + a.plan);
  const RebalancePlan plan = read_plan(pin);
  const auto emitted = execute_rebalance(streams_from(assignments), plan, a.c.seed);

  if (a.manifest.empty()) {
    std::vector<ordered_json> lines;
    for (const auto& e : emitted) lines.push_back({{"id", e.sample_id}, {"category", e.category}});
    write_jsonl(a.c.output, lines);
    return 0;
  }
  const ParseResult in = read_manifest_file(a.manifest);
  report_parse_errors(in.errors);
  std::unordered_map<std::string, const SampleRecord*> by_id;
  for (const auto& r : in.manifest.records)
    if (const auto* s = std::get_if<SampleRecord>(&r)) by_id.emplace(s->id, s);
  std::vector<SampleRecord> out;
  for (const auto& e : emitted) {
    auto it = by_id.find(e.sample_id);
    if (it == by_id.end()) throw Error(ErrorCode::InvalidArgument, "sample '" + e.sample_id + "' not in manifest");
    out.push_back(*it->second);
  }
  emit(a.c.output, write_manifest(manifest_of(std::move(out))));
  return 0;
}

// ---------------------------------------------------------------------------
// qc

ordered_json key_line(std::size_t pos, const SentinelRecord& s) {
  ordered_json j;
  j["position"] = pos;
  j["sample_id"] = s.sample_id;
  j["aesthetics"] = s.truth.aesthetics;
  j["info_density"] = s.truth.info_density;
  j["style_purity"] = s.truth.style_purity;
  return j;
}

SentinelKey load_key(const std::string& path) {
  SentinelKey key;
  for (auto& [pos, s] : read_json_lines<std::pair<std::size_t, SentinelRecord>>(path, [](const nlohmann::json& j) {
         return std::make_pair(j.at("position").get<std::size_t>(), sentinel_from_json(j));
       }))
    key.emplace(pos, std::move(s));
  return key;
}

struct SentinelArgs {
  Common c;
  std::string pool;
  std::string key;
  double rate = 0.05;
};

int cmd_qc_sentinel(const SentinelArgs& a) {
  const auto batch = read_id_list(require(a.c.input, "--input"));
  const auto pool = load_sentinel_pool(require(a.pool, "--pool"));
  const SeededBatch sb = seed_sentinels(batch, pool, a.rate, a.c.seed);
  std::vector<std::string> ids;
  for (const auto& it : sb.items) ids.push_back(it.sample_id);
  std::vector<ordered_json> key;
  for (const auto& [pos, s] : sb.key) key.push_back(key_line(pos, s));
  write_jsonl(require(a.key, "--key"), key);
  emit(a.c.output, write_id_list(ids));
  return 0;
}

struct EvaluateArgs {
  Common c;
  std::string key;
  double accuracy_min = 0.90;
  bool within_one = false;
};

int cmd_qc_evaluate(const EvaluateArgs& a) {
  const auto annotations = load_annotations(require(a.c.input, "--input"));
  const SentinelKey key = load_key(require(a.key, "--key"));
  const auto mode = a.within_one ? SentinelMatch::WithinOne : SentinelMatch::Exact;
  std::vector<ordered_json> lines;
  bool any_flagged = false;
  for (const auto& [who, ev] : evaluate_annotators(annotations, key, a.accuracy_min, mode)) {
    ordered_json j;
    j["annotator_id"] = who;
    j["sentinels"] = ev.total;
    j["correct"] = ev.correct;
    j["accuracy"] = ev.accuracy;
    j["flagged"] = ev.flagged;
    any_flagged = any_flagged || ev.flagged;
    lines.push_back(std::move(j));
  }
  write_jsonl(a.c.output, lines);
  std::cerr << (any_flagged ? "flagged annotators present\n" : "no annotator flagged\n");
  return 0;
}

struct AuditArgs {
  Common c;
  std::string judgments;
  std::string batch_id = "batch";
  double rate = 0.05;
  double fail_max = 0.05;
};

int cmd_qc_audit(const AuditArgs& a) {
  const auto accepted = read_id_list(require(a.c.input, "--input"));
  std::unordered_map<std::string, bool> low;
  for (auto& [id, bad] : read_json_lines<std::pair<std::string, bool>>(
           require(a.judgments, "--judgments"), [](const nlohmann::json& j) {
             return std::make_pair(j.at("id").get<std::string>(), j.at("low_quality").get<bool>());
           }))
    low[id] = bad;
  const AuditReport r = audit_batch(a.batch_id, accepted, low, a.rate, a.fail_max, a.c.seed);
  write_jsonl(a.c.output, {to_json(r)});
  std::cerr << "batch " << r.batch_id << ": " << r.low_quality << "/" << r.audited << " low quality, "
            << to_string(r.verdict) << '\n';
  return 0;
}

int cmd_qc_calibration(const Common& c) {
  const auto annotations = load_annotations(require(c.input, "--input"));
  emit(c.output, calibration_report(annotations).dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct MixtureArgs {
  Common c;
  bool iid = false;
  std::string report;
};

int cmd_mixture(const MixtureArgs& a) {
  const std::string path = require(a.c.config, "--config");
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  const MixtureSpec spec = mixture_from_json(j, std::filesystem::absolute(path).parent_path().string());
  std::vector<std::vector<std::string>> pools;
  for (const auto& e : spec.entries) {
    std::vector<std::string> ids;
    if (e.ratio > 0.0) {
      const ParseResult r = read_manifest_file(require(e.manifest, "dataset manifest"));
      report_parse_errors(r.errors);
      for (const auto& rec : r.manifest.records) ids.push_back(record_id(rec));
    }
    pools.push_back(std::move(ids));
  }
  const MixtureResult res =
      mixture_sample(spec, pools, a.c.seed, a.iid ? MixtureMode::Iid : MixtureMode::Apportioned);
  std::vector<ordered_json> lines;
  for (const auto& d : res.stream) lines.push_back({{"dataset", d.dataset}, {"id", d.id}});
  std::vector<ordered_json> usage;
  for (const auto& u : res.usage) usage.push_back(to_json(u));
  if (!a.report.empty()) write_jsonl(a.report, usage);
  write_jsonl(a.c.output, lines);
  for (const auto& u : usage) std::cerr << u.dump() << '\n';
  return 0;
}

struct RunArgs {
  Common c;
  bool seed_given = false;
  bool workers_given = false;
};

int cmd_run(const RunArgs& a) {
  PipelineConfig cfg = load_pipeline_config(require(a.c.config, "--config"));
  if (a.seed_given) cfg.seed = a.c.seed;
  if (a.workers_given) cfg.workers = a.c.workers;
  if (!a.c.input.empty()) cfg.input = a.c.input;
  if (!a.c.output.empty()) cfg.output_dir = a.c.output;
  const PipelineResult r = run_pipeline_files(cfg);
  write_summary(r.reports, std::cerr, true);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dataset curation toolkit"};
  app.require_subcommand(1);

  FilterArgs filter;
  auto* f = app.add_subcommand("filter", "Run one filtering stage over a manifest");
  add_common(f, filter.c, false);
  f->add_option("--stage", filter.stage, "Stage 1, 2 or 3")->required()->check(CLI::Range(1, 3));
  f->add_option("--rules", filter.rules, "Caption rule file");
  f->add_option("--scorer", filter.scorer, "synthetic or table");
  f->add_option("--scores", filter.scores, "Score table (JSON-lines) for --scorer table");
  f->add_option("--image-root", filter.image_root, "Directory that image_ref paths are relative to");
  f->add_option("--rejections", filter.rejections, "Rejection report (JSON-lines)");

  CaptionQaArgs cqa;
  auto* q = app.add_subcommand("caption-qa", "Check OCR/caption fidelity");
  add_common(q, cqa.c, false);
  q->add_option("--mode", cqa.mode, "drop_record or drop_caption");
  q->add_option("--rejections", cqa.rejections, "Rejection report (JSON-lines)");

  TagArgs tag;
  auto* t = app.add_subcommand("tag", "Assign taxonomy tags to records with embeddings");
  add_common(t, tag.c, false);
  t->add_option("--tree", tag.tree, "Tag tree file")->required();
  t->add_option("--tag-embeddings", tag.embeddings, "Tag embeddings (JSON-lines)")->required();
  t->add_option("--top-k", tag.top_k, "Candidates per record")->check(CLI::PositiveNumber);
  t->add_option("--target", tag.target, "Tags kept per record")->check(CLI::PositiveNumber);

  Common plan;
  auto* p = app.add_subcommand("rebalance-plan", "Plan per-category targets from tag assignments");
  add_common(p, plan, false);

  ExecArgs exec;
  auto* e = app.add_subcommand("rebalance-exec", "Sample records according to a plan");
  add_common(e, exec.c, true);
  e->add_option("--plan", exec.plan, "Plan (JSON-lines)")->required();
  e->add_option("--manifest", exec.manifest, "Manifest to draw records from");

  auto* qc = app.add_subcommand("qc", "Annotation quality control");
  qc->require_subcommand(1);
  SentinelArgs sen;
  auto* qs = qc->add_subcommand("sentinel", "Seed sentinels into a batch of ids");
  add_common(qs, sen.c, true);
  qs->add_option("--pool", sen.pool, "Sentinel pool (JSON-lines)")->required();
  qs->add_option("--key", sen.key, "Where to write the hidden key")->required();
  qs->add_option("--rate", sen.rate, "Sentinel rate")->check(CLI::Range(0.0, 1.0));
  EvaluateArgs ev;
  auto* qe = qc->add_subcommand("evaluate", "Score annotators against the sentinel key");
  add_common(qe, ev.c, false);
  qe->add_option("--key", ev.key, "Hidden key from 'qc sentinel'")->required();
  qe->add_option("--accuracy-min", ev.accuracy_min, "Flag below this accuracy")->check(CLI::Range(0.0, 1.0));
  qe->add_flag("--within-one", ev.within_one, "Count a sentinel correct when each score is within one point");
  AuditArgs au;
  auto* qa = qc->add_subcommand("audit", "Audit a random sample of an accepted batch");
  add_common(qa, au.c, true);
  qa->add_option("--judgments", au.judgments, "JSON-lines of {id, low_quality}")->required();
  qa->add_option("--batch-id", au.batch_id, "Batch identifier");
  qa->add_option("--rate", au.rate, "Audit rate");
  qa->add_option("--fail-max", au.fail_max, "Maximum low-quality fraction");
  Common cal;
  auto* qcal = qc->add_subcommand("calibration", "Score distribution against the calibration bands");
  add_common(qcal, cal, false);

  MixtureArgs mix;
  auto* m = app.add_subcommand("mixture", "Draw an interleaved training stream from several datasets");
  add_common(m, mix.c, true);
  m->add_flag("--iid", mix.iid, "Draw dataset counts i.i.d. instead of by apportionment");
  m->add_option("--report", mix.report, "Per-dataset usage (JSON-lines)");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run the full pipeline from a config file");
  add_common(r, run.c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return static_cast<int>(ErrorCategory::Config);
  }

  try {
    if (*f) return cmd_filter(filter);
    if (*q) return cmd_caption_qa(cqa);
    if (*t) return cmd_tag(tag);
    if (*p) return cmd_rebalance_plan(plan);
    if (*e) return cmd_rebalance_exec(exec);
    if (*qs) return cmd_qc_sentinel(sen);
    if (*qe) return cmd_qc_evaluate(ev);
    if (*qa) return cmd_qc_audit(au);
    if (*qcal) return cmd_qc_calibration(cal);
    if (*m) return cmd_mixture(mix);
    if (*r) {
      run.seed_given = r->count("--seed") > 0;
      run.workers_given = r->count("--workers") > 0;
      return cmd_run(run);
    }
  } catch (const Error& ex) {
    std::cerr << "error: " << to_string(ex.code()) << ": " << ex.what() << '\n';
    return static_cast<int>(ex.category());
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return static_cast<int>(ErrorCategory::Data);
  }
  return 0;
}
