// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "curate/curate.hpp"
#include "support/cascade_table.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace curate;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome cascade_branch_table() {
  const auto t0 = Clock::now();
  const CascadeThresholds t;
  std::size_t hits = 0, realised = 0;
  const auto table = fixtures::cascade_truth_table();
  for (const auto& c : table) {
    realised += fixtures::flags_hold(c);
    const auto got = evaluate_cascade(c.stats, c.perceptual, t);
    const auto want = fixtures::expected_branch(c);
    hits += got.verdict == want.verdict && got.reason == want.reason;
  }
  const double secs = seconds_since(t0);
  return {table.size() == 32 && hits == 32 && realised == 32 && secs < 1.0,
          fmt("%zu/32 branches exact, %zu/32 fixtures realise their flags, %.4f s", hits, realised, secs)};
}

Outcome curriculum_monotonicity() {
  const auto corpus = fixtures::synthetic_corpus(10'000, 2024);
  const SyntheticScorer scorer(11);
  const auto stages = default_curriculum();
  std::vector<std::set<std::string>> accepted;
  for (const auto& sc : stages) {
    std::set<std::string> ids;
    for (const auto& r : run_stage(corpus, sc, &scorer, default_caption_rules()).accepted) ids.insert(r.id);
    accepted.push_back(std::move(ids));
  }
  std::size_t violations = 0;
  for (std::size_t s = 1; s < 3; ++s)
    for (const auto& id : accepted[s]) violations += !accepted[s - 1].count(id);
  return {violations == 0, fmt("accepted 1/2/3 = %zu/%zu/%zu of 10000, %zu violations", accepted[0].size(),
                               accepted[1].size(), accepted[2].size(), violations)};
}

Outcome metric_analytics() {
  std::vector<std::string> failed;
  for (float c : {0.0f, 0.25f, 0.5f, 1.0f}) {
    const auto s = compute_indicators(to_rgb(GrayImage(32, 32, c)));
    if (std::abs(s.brightness - c) > 1e-6 || s.entropy != 0.0 || s.saturation != 0.0 || s.sharpness_variance != 0.0)
      failed.push_back(fmt("constant %.2f", c));
  }
  GrayImage levels(256, 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 256; ++x) levels.at(x, y) = static_cast<float>(x) / 255.0f;
  const double h = entropy(levels);
  if (std::abs(h - 8.0) > 1e-9) failed.push_back(fmt("entropy %.12f", h));
  GrayImage ramp(64, 48);
  for (std::size_t y = 0; y < ramp.height; ++y)
    for (std::size_t x = 0; x < ramp.width; ++x) ramp.at(x, y) = 0.1f + 0.01f * static_cast<float>(x) + 0.005f * static_cast<float>(y);
  const double v = sharpness_variance(ramp);
  if (std::abs(v) > 1e-9) failed.push_back(fmt("ramp variance %.3g", v));
  std::string detail = fmt("uniform-256 entropy %.12f, ramp variance %.3g", h, v);
  for (const auto& f : failed) detail += "; failed: " + f;
  return {failed.empty(), detail};
}

Outcome rebalance_schedule() {
  RebalanceSchedule s;
  s.segments = {{100'000, 1.0}};
  const auto big = plan_category("x", 1'000'000, s);
  const auto small = plan_category("x", 50'000, s);
  s.boost["x"] = 1.5;
  const auto boosted = plan_category("x", 1'000'000, s);
  bool ok = big.target == 333'333 && small.target == 50'000 && boosted.target == 500'000;

  std::mt19937_64 g(4);
  std::size_t over = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    CategoryHistogram hist;
    RebalanceSchedule rs;
    const int cats = 1 + static_cast<int>(g() % 40);
    for (int c = 0; c < cats; ++c) {
      const std::string tag = "t" + std::to_string(c);
      hist[tag] = static_cast<std::uint64_t>(std::pow(10.0, 8.0 * static_cast<double>(g() % 100'000) / 100'000.0));
      if (g() % 5 == 0) rs.boost[tag] = 1.2 + 0.3 * static_cast<double>(g() % 101) / 100.0;
    }
    std::uint64_t targets = 0, counts = 0;
    for (const auto& [tag, e] : plan_rebalance(hist, rs)) targets += e.target, counts += e.count;
    over += targets > counts;
  }
  ok = ok && over == 0;
  return {ok, fmt("targets %llu / %llu / %llu (boosted), %zu of 1000 histograms over budget",
                  static_cast<unsigned long long>(big.target), static_cast<unsigned long long>(small.target),
                  static_cast<unsigned long long>(boosted.target), over)};
}

struct RandomTree {
  std::vector<TagNodeSpec> specs;
  std::map<std::string, std::string> parent;
};

RandomTree random_tree(std::mt19937_64& g, std::size_t n) {
  RandomTree t;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "n" + std::to_string(i);
    std::string p;
    if (i > 0 && g() % 6 != 0) p = "n" + std::to_string(g() % i);
    t.specs.push_back({id, p, id});
    t.parent[id] = p;
  }
  return t;
}

Outcome diversity_oracle() {
  std::mt19937_64 g(5);
  std::size_t mismatches = 0, collisions = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto rt = random_tree(g, 1 + g() % 50);
    const auto tree = build_tag_tree(rt.specs);
    std::vector<oracle::Cand> cands;
    std::vector<TagCandidate> lib;
    for (auto i : tree.leaves())
      if (g() % 4 != 0) {
        cands.push_back({tree.node(i).id, static_cast<double>(g() % 20) / 20.0});
        lib.push_back({cands.back().id, cands.back().score});
      }
    const std::size_t target = 1 + g() % 8;
    const auto got = diversity_sample(lib, tree, target);
    mismatches += got != oracle::diversity_reference(cands, rt.parent, target);

    // The grouping level, recomputed from the tree: deepest proper-ancestor
    // level with at least `target` groups, else the deepest one.
    std::size_t max_depth = 0;
    for (const auto& c : lib) max_depth = std::max(max_depth, tree.node(tree.index_of(c.tag_id)).depth);
    auto key = [&](const std::string& id, std::size_t l) {
      const auto i = tree.index_of(id);
      return tree.node(i).depth <= l ? i : tree.ancestor_at(i, l);
    };
    std::size_t level = max_depth > 0 ? max_depth - 1 : 0;
    for (std::size_t l = max_depth; l-- > 0;) {
      std::set<std::size_t> groups;
      for (const auto& c : lib) groups.insert(key(c.tag_id, l));
      if (groups.size() >= target) {
        level = l;
        break;
      }
    }
    std::set<std::size_t> used;
    for (const auto& id : got) collisions += !used.insert(key(id, level)).second;
  }
  return {mismatches == 0 && collisions == 0,
          fmt("500 trees: %zu oracle mismatches, %zu subtree collisions", mismatches, collisions)};
}

Outcome topk_oracle() {
  std::mt19937_64 g(6);
  std::size_t mismatches = 0, scale_changes = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + g() % 1000, dim = 2 + g() % 15, k = 1 + g() % 40;
    TagEmbeddings vocab;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("tag" + std::to_string(i));
      rows.push_back(fixtures::random_unit(g, dim));
      vocab.add(ids.back(), rows.back());
    }
    const auto q = fixtures::random_unit(g, dim);
    std::vector<std::string> got;
    for (const auto& c : tag_topk(q, vocab, k)) got.push_back(c.tag_id);
    mismatches += got != oracle::topk_exhaustive(q, ids, rows, k);
    for (double s : {1e-3, 0.37, 42.0, 1e5}) {
      auto scaled = q;
      for (double& x : scaled) x *= s;
      std::vector<std::string> again;
      for (const auto& c : tag_topk(scaled, vocab, k)) again.push_back(c.tag_id);
      scale_changes += again != got;
    }
  }
  return {mismatches == 0 && scale_changes == 0,
          fmt("200 vocabularies: %zu oracle mismatches, %zu changes under rescaling", mismatches, scale_changes)};
}

Outcome dedup() {
  std::mt19937_64 g(7);
  std::size_t mismatches = 0, not_idempotent = 0, exact_wrong = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + g() % 200, dim = 2 + g() % 6;
    std::vector<SampleRecord> rs;
    std::vector<std::vector<double>> v;
    for (std::size_t i = 0; i < n; ++i) {
      rs.push_back(fixtures::basic_record("r" + std::to_string(i)));
      // Some near-copies of earlier vectors so groups of several members occur.
      if (i > 0 && g() % 4 == 0) {
        auto e = v[g() % i];
        e[g() % dim] += 0.05;
        v.push_back(fixtures::unit(std::move(e)));
      } else {
        v.push_back(fixtures::random_unit(g, dim));
      }
      rs.back().embedding = v.back();
      rs.back().content_digest = md5_hex("payload" + std::to_string(g() % (n / 2 + 1)));
    }
    const double tau = std::vector<double>{0.8, 0.95, 0.99}[g() % 3];
    const auto groups = dedup_semantic(rs, tau, 1 + g() % 4);
    std::vector<std::vector<std::size_t>> got;
    for (const auto& gr : groups) got.push_back(gr.members);
    mismatches += got != oracle::single_linkage(v, tau);

    const auto mask = non_keeper_mask(groups, n);
    std::vector<SampleRecord> keepers;
    for (std::size_t i = 0; i < n; ++i)
      if (!mask[i]) keepers.push_back(rs[i]);
    not_idempotent += !dedup_semantic(keepers, tau).empty();

    std::map<std::string, std::vector<std::size_t>> by_payload;
    for (std::size_t i = 0; i < n; ++i) by_payload[rs[i].content_digest].push_back(i);
    std::vector<std::vector<std::size_t>> want;
    for (auto& [d, m] : by_payload)
      if (m.size() > 1) want.push_back(m);
    std::sort(want.begin(), want.end());
    std::vector<std::vector<std::size_t>> exact;
    for (const auto& gr : dedup_exact(rs)) exact.push_back(gr.members);
    std::sort(exact.begin(), exact.end());
    exact_wrong += exact != want;
  }
  return {mismatches == 0 && not_idempotent == 0 && exact_wrong == 0,
          fmt("100 cases n<=200: %zu oracle mismatches, %zu idempotence failures, %zu exact-group errors", mismatches,
              not_idempotent, exact_wrong)};
}

Outcome qc_arithmetic() {
  const double c = composite_score({"x", "a", 5, 3, 4}).value;
  SentinelKey key;
  for (std::size_t i = 0; i < 20; ++i) key.emplace(i, SentinelRecord{"s" + std::to_string(i), {"s" + std::to_string(i), "", 5, 4, 3}});
  auto answers = [](std::size_t correct) {
    std::vector<AnnotationScore> a;
    for (std::size_t i = 0; i < 20; ++i) a.push_back({"s" + std::to_string(i), "ann", i < correct ? 5 : 4, 4, 3});
    return a;
  };
  const bool f17 = evaluate_annotator(answers(17), key).flagged;
  const bool f18 = evaluate_annotator(answers(18), key).flagged;
  std::vector<std::string> batch;
  for (int i = 0; i < 100; ++i) batch.push_back("b" + std::to_string(i));
  auto audit = [&](std::size_t bad) {
    std::unordered_map<std::string, bool> j;
    for (std::size_t i = 0; i < batch.size(); ++i) j[batch[i]] = i < bad;
    return audit_batch("day", batch, j, 1.0, 0.05, 1).verdict;
  };
  const auto v6 = audit(6), v5 = audit(5);
  const bool ok = c == 4.2 && f17 && !f18 && v6 == AuditVerdict::Returned && v5 == AuditVerdict::Accepted;
  return {ok, fmt("composite(5,3,4)=%.17g, 17/20 %s, 18/20 %s, 6/100 %s, 5/100 %s", c, f17 ? "flagged" : "not flagged",
                  f18 ? "flagged" : "not flagged", std::string(to_string(v6)).c_str(), std::string(to_string(v5)).c_str())};
}

PipelineConfig determinism_config(const fs::path& dir, std::size_t workers) {
  PipelineConfig cfg;
  cfg.seed = 99;
  cfg.workers = workers;
  cfg.input = (dir / "input.jsonl").string();
  cfg.output_dir = (dir / ("out-w" + std::to_string(workers))).string();
  std::vector<TagNodeSpec> nodes{{"root-a", "", ""}, {"root-b", "", ""}};
  for (int m = 0; m < 6; ++m) nodes.push_back({"mid" + std::to_string(m), m % 2 ? "root-b" : "root-a", ""});
  TaxonomyConfig tax;
  std::mt19937_64 g(8);
  for (int l = 0; l < 24; ++l) {
    nodes.push_back({"leaf" + std::to_string(l), "mid" + std::to_string(l % 6), ""});
    tax.vocab.add(nodes.back().id, fixtures::random_unit(g, 8));
  }
  tax.tree = build_tag_tree(nodes);
  tax.top_k = 8;
  tax.diversity_target = 3;
  cfg.taxonomy = std::move(tax);
  cfg.schedule.tail_threshold = 5;
  cfg.schedule.segments = {{5, 1.0}, {20, 0.8}};
  return cfg;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("curate-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream in(dir / "input.jsonl", std::ios::binary);
    in << write_manifest(manifest_of(fixtures::synthetic_corpus(1000, 9)));
  }
  auto read = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  };
  const auto first = run_pipeline_files(determinism_config(dir, 1));
  fs::rename(dir / "out-w1", dir / "first");
  run_pipeline_files(determinism_config(dir, 1));
  run_pipeline_files(determinism_config(dir, 8));
  std::size_t differing = 0, files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "first")) {
    const std::string a = read(entry.path());
    ++files;
    differing += a != read(dir / "out-w1" / entry.path().filename());
    differing += a != read(dir / "out-w8" / entry.path().filename());
  }
  fs::remove_all(dir);
  const bool rebalanced = first.plan.has_value() && !first.manifest.records.empty();
  return {differing == 0 && files >= 6 && rebalanced,
          fmt("%zu output files compared across 2 runs and 1 vs 8 workers, %zu differ; %zu records kept", files,
              differing, first.manifest.records.size())};
}

Outcome throughput() {
  constexpr std::size_t kImages = 10'000, kPool = 64, kSide = 256;
  std::vector<RgbImage> pool;
  for (std::size_t i = 0; i < kPool; ++i) pool.push_back(fixtures::noise_image(kSide, kSide, 1000 + i));
  for (std::size_t i = 0; i < kPool; i += 4)  // smooth half the pool so more than one branch is exercised
    for (auto& p : pool[i].pixels) p = {p.r * 0.1f + 0.45f, p.g * 0.1f + 0.45f, p.b * 0.1f + 0.45f};
  const CascadeThresholds t;
  auto run = [&](std::size_t workers) {
    std::vector<int> verdicts(kImages);
    const auto t0 = Clock::now();
    parallel_for(kImages, workers, [&](std::size_t i) {
      const auto s = compute_indicators(pool[i % kPool]);
      const PerceptualScores p{3.0 + static_cast<double>(i % 7), 0.4 + 0.05 * static_cast<double>(i % 5), 50.0};
      verdicts[i] = static_cast<int>(evaluate_cascade(s, p, t).verdict);
    });
    return std::make_pair(seconds_since(t0), verdicts);
  };
  const auto [t1, v1] = run(1);
  const auto [t4, v4] = run(4);
  const double speedup = t1 / t4;
  const unsigned cores = std::thread::hardware_concurrency();
  return {t1 < 10.0 && speedup >= 3.0 && v1 == v4,
          fmt("1 worker %.3f s (limit 10 s), 4 workers %.3f s, speedup %.2fx (need 3x), %u hardware threads", t1, t4,
              speedup, cores)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 cascade branch table", cascade_branch_table},
      {"2 curriculum monotonicity", curriculum_monotonicity},
      {"3 metric analytics", metric_analytics},
      {"4 rebalance schedule", rebalance_schedule},
      {"5 diversity-sampling oracle", diversity_oracle},
      {"6 top-k oracle and scale invariance", topk_oracle},
      {"7 dedup", dedup},
      {"8 QC arithmetic", qc_arithmetic},
      {"9 determinism", determinism},
      {"10 throughput", throughput},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
