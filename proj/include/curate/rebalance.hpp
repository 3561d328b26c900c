#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "curate/error.hpp"
#include "curate/random.hpp"

namespace curate {

using CategoryHistogram = std::map<std::string, std::uint64_t>;

/// Tags assigned to one sample.
struct TagAssignment {
  std::string sample_id;
  std::vector<std::string> tags;

  bool operator==(const TagAssignment&) const = default;
};

/// Occurrence count per tag. Tags listed in `vocabulary` appear even when
/// their count is zero.
inline CategoryHistogram build_histogram(const std::vector<TagAssignment>& assignments,
                                         const std::vector<std::string>& vocabulary = {}) {
  CategoryHistogram h;
  for (const auto& v : vocabulary) h.emplace(v, 0);
  for (const auto& a : assignments)
    for (const auto& t : a.tags) ++h[t];
  return h;
}

struct ScheduleSegment {
  std::uint64_t lower_bound;
  double base_rate;

  bool operator==(const ScheduleSegment&) const = default;
};

inline constexpr double kDefaultBoost = 1.3;

struct RebalanceSchedule {
  std::uint64_t tail_threshold = 100'000;
  std::vector<ScheduleSegment> segments{{100'000, 1.0}, {1'000'000, 0.8}, {10'000'000, 0.6}};
  std::map<std::string, double> boost;
  double log_base = 10.0;

  double log(double x) const { return log_base == 10.0 ? std::log10(x) : std::log(x) / std::log(log_base); }

  /// Base rate of the last segment whose lower bound is <= count.
  double base_rate(std::uint64_t count) const {
    double rate = segments.front().base_rate;
    for (const auto& s : segments)
      if (s.lower_bound <= count) rate = s.base_rate;
    return rate;
  }
};

inline void validate_schedule(const RebalanceSchedule& s) {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidSchedule, m); };
  if (s.segments.empty()) bad("schedule has no segments");
  if (s.segments.front().lower_bound != s.tail_threshold) bad("first segment bound must equal tail_threshold");
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const auto& seg = s.segments[i];
    if (!(seg.base_rate > 0.0 && seg.base_rate <= 1.0)) bad("base_rate must lie in (0, 1]");
    if (i > 0 && seg.lower_bound <= s.segments[i - 1].lower_bound) bad("segment bounds must strictly increase");
  }
  for (const auto& [tag, m] : s.boost)
    if (!(m >= 1.2 && m <= 1.5)) bad("boost for '" + tag + "' must lie in [1.2, 1.5]");
  if (!(s.log_base > 1.0) || !std::isfinite(s.log_base)) bad("log_base must be finite and > 1");
}

/// {"tail_threshold", "segments": [[bound, rate], ...], "boost": {tag: m} or
/// [tag, ...] (default multiplier), "log_base"}; absent keys keep defaults.
inline RebalanceSchedule schedule_from_json(const nlohmann::json& j) {
  RebalanceSchedule s;
  try {
    if (j.contains("tail_threshold")) s.tail_threshold = j["tail_threshold"].get<std::uint64_t>();
    if (j.contains("segments")) {
      s.segments.clear();
      for (const auto& seg : j["segments"]) s.segments.push_back({seg.at(0).get<std::uint64_t>(), seg.at(1).get<double>()});
    }
    if (j.contains("boost")) {
      const auto& b = j["boost"];
      if (b.is_array())
        for (const auto& t : b) s.boost[t.get<std::string>()] = kDefaultBoost;
      else
        for (const auto& [k, v] : b.items()) s.boost[k] = v.get<double>();
    }
    if (j.contains("log_base")) s.log_base = j["log_base"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSchedule, e.what());
  }
  validate_schedule(s);
  return s;
}

inline nlohmann::ordered_json to_json(const RebalanceSchedule& s) {
  nlohmann::ordered_json j;
  j["tail_threshold"] = s.tail_threshold;
  j["segments"] = nlohmann::ordered_json::array();
  for (const auto& seg : s.segments) j["segments"].push_back({seg.lower_bound, seg.base_rate});
  j["boost"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.boost) j["boost"][k] = v;
  j["log_base"] = s.log_base;
  return j;
}

enum class Provenance { TailRetained, Scheduled, Boosted };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::TailRetained: return "tail-retained";
    case Provenance::Scheduled: return "scheduled";
    case Provenance::Boosted: return "boosted";
  }
  return "?";
}

inline Provenance parse_provenance(std::string_view s) {
  if (s == "tail-retained") return Provenance::TailRetained;
  if (s == "scheduled") return Provenance::Scheduled;
  if (s == "boosted") return Provenance::Boosted;
  throw Error(ErrorCode::MalformedLine, "unknown provenance '" + std::string(s) + "'");
}

struct PlanEntry {
  std::uint64_t count = 0;
  std::uint64_t target = 0;
  Provenance provenance = Provenance::TailRetained;

  bool operator==(const PlanEntry&) const = default;
};

using RebalancePlan = std::map<std::string, PlanEntry>;

inline std::uint64_t round_half_up(double x) { return static_cast<std::uint64_t>(std::floor(x + 0.5)); }

/// Sampling fraction for a head category: base * 2 / log(count) in (0, 1].
inline double schedule_fraction(std::uint64_t count, const RebalanceSchedule& s) {
  const double lg = s.log(static_cast<double>(count));
  if (!(lg > 0.0)) return 1.0;
  return std::min(1.0, s.base_rate(count) * 2.0 / lg);
}

inline PlanEntry plan_category(std::string_view tag, std::uint64_t count, const RebalanceSchedule& s) {
  if (count < s.tail_threshold) return {count, count, Provenance::TailRetained};
  std::uint64_t target = round_half_up(schedule_fraction(count, s) * static_cast<double>(count));
  target = std::clamp<std::uint64_t>(target, 1, count);
  auto b = s.boost.find(std::string(tag));
  if (b == s.boost.end()) return {count, target, Provenance::Scheduled};
  target = std::min(count, round_half_up(b->second * static_cast<double>(target)));
  return {count, target, Provenance::Boosted};
}

inline RebalancePlan plan_rebalance(const CategoryHistogram& hist, const RebalanceSchedule& sched) {
  validate_schedule(sched);
  RebalancePlan plan;
  for (const auto& [tag, count] : hist) plan.emplace(tag, plan_category(tag, count, sched));
  return plan;
}

inline nlohmann::ordered_json plan_line(const std::string& tag, const PlanEntry& e) {
  nlohmann::ordered_json j;
  j["tag_id"] = tag;
  j["count"] = e.count;
  j["target"] = e.target;
  j["provenance"] = to_string(e.provenance);
  return j;
}

inline void write_plan(const RebalancePlan& plan, std::ostream& out) {
  for (const auto& [tag, e] : plan) out << plan_line(tag, e).dump() << '\n';
}

inline RebalancePlan read_plan(std::istream& in) {
  RebalancePlan plan;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PlanEntry e{j.at("count").get<std::uint64_t>(), j.at("target").get<std::uint64_t>(),
                  parse_provenance(j.at("provenance").get<std::string>())};
      if (!plan.emplace(j.at("tag_id").get<std::string>(), e).second)
        throw Error(ErrorCode::DuplicateId, "plan line " + std::to_string(lineno));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, "plan line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return plan;
}

/// Sample ids per category, each list in stream order.
using CategoryStreams = std::map<std::string, std::vector<std::string>>;

inline CategoryStreams streams_from(const std::vector<TagAssignment>& assignments) {
  CategoryStreams s;
  for (const auto& a : assignments) {
    std::unordered_set<std::string_view> seen;
    for (const auto& t : a.tags)
      if (seen.insert(t).second) s[t].push_back(a.sample_id);
  }
  return s;
}

struct Emission {
  std::string sample_id;
  std::string category;

  bool operator==(const Emission&) const = default;
};

/// Category processing order: ascending planned count, then ascending id.
inline std::vector<std::string> category_order(const RebalancePlan& plan) {
  std::vector<std::string> order;
  order.reserve(plan.size());
  for (const auto& [tag, e] : plan) order.push_back(tag);
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return plan.at(a).count < plan.at(b).count; });
  return order;
}

/// Draws each category's target from its stream by seeded uniform sampling
/// without replacement, rarest category first. A sample already emitted for
/// an earlier category is skipped and does not count toward the target.
/// Each category draws from its own generator seeded by (seed, category).
inline std::vector<Emission> execute_rebalance(const CategoryStreams& streams, const RebalancePlan& plan,
                                               std::uint64_t seed) {
  for (const auto& [tag, ids] : streams)
    if (!ids.empty() && !plan.contains(tag)) throw Error(ErrorCode::InvalidArgument, "plan has no entry for '" + tag + "'");

  std::vector<Emission> out;
  std::unordered_set<std::string> emitted;
  for (const auto& tag : category_order(plan)) {
    const std::uint64_t target = plan.at(tag).target;
    auto it = streams.find(tag);
    const std::size_t available = it == streams.end() ? 0 : it->second.size();
    if (target > available)
      throw Error(ErrorCode::TargetExceedsAvailable, "'" + tag + "' target " + std::to_string(target) + " > " +
                                                         std::to_string(available) + " available");
    if (target == 0) continue;
    const auto& ids = it->second;
    Rng rng(derive_seed(seed, tag));
    LazyShuffle shuffle(ids.size(), rng);
    std::uint64_t taken = 0;
    while (taken < target && !shuffle.done()) {
      const std::string& id = ids[shuffle.next()];
      if (!emitted.insert(id).second) continue;
      out.push_back({id, tag});
      ++taken;
    }
  }
  return out;
}

inline nlohmann::ordered_json to_json(const TagAssignment& a) {
  nlohmann::ordered_json j;
  j["id"] = a.sample_id;
  j["tags"] = a.tags;
  return j;
}

/// JSON-lines of {"id", "tags": [...]}.
inline std::vector<TagAssignment> read_assignments(std::istream& in) {
  std::vector<TagAssignment> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("tags").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, "assignment line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<TagAssignment> load_assignments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open assignments " + path);
  return read_assignments(in);
}

}  // namespace curate
