#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "curate/error.hpp"
#include "curate/random.hpp"

namespace curate {

struct MixtureEntry {
  std::string name;
  std::string manifest;
  double ratio = 0.0;
};

struct MixtureSpec {
  std::vector<MixtureEntry> entries;
  std::uint64_t total = 0;
};

inline void validate_mixture(const MixtureSpec& spec) {
  bool any = false;
  std::vector<std::string> names;
  for (const auto& e : spec.entries) {
    if (!(e.ratio >= 0.0) || !std::isfinite(e.ratio))
      throw Error(ErrorCode::Config, "ratio of '" + e.name + "' must be a finite value >= 0");
    any = any || e.ratio > 0.0;
    names.push_back(e.name);
  }
  if (!any) throw Error(ErrorCode::AllRatiosZero, "no dataset has a positive ratio");
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw Error(ErrorCode::Config, "dataset names must be unique");
}

/// Largest-remainder apportionment of `total` by `ratios`: floors of the
/// exact quotas, then one extra unit to each of the largest remainders
/// (ties go to the lexicographically smaller name). Sums to `total`.
inline std::vector<std::uint64_t> apportion(const std::vector<MixtureEntry>& entries, std::uint64_t total) {
  const double sum = std::accumulate(entries.begin(), entries.end(), 0.0,
                                     [](double s, const MixtureEntry& e) { return s + e.ratio; });
  if (!(sum > 0.0)) throw Error(ErrorCode::AllRatiosZero, "no dataset has a positive ratio");
  std::vector<std::uint64_t> counts(entries.size());
  std::vector<double> rem(entries.size());
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double quota = entries[i].ratio / sum * static_cast<double>(total);
    counts[i] = static_cast<std::uint64_t>(std::floor(quota));
    rem[i] = quota - std::floor(quota);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::erase_if(order, [&](std::size_t i) { return entries[i].ratio <= 0.0; });
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rem[a] != rem[b] ? rem[a] > rem[b] : entries[a].name < entries[b].name;
  });
  // Rounding can leave the floors a unit off in either direction.
  while (assigned > total) {
    for (auto it = order.rbegin(); it != order.rend() && assigned > total; ++it)
      if (counts[*it] > 0) --counts[*it], --assigned;
  }
  for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) ++counts[order[k]], ++assigned;
  return counts;
}

/// Dataset counts from i.i.d. categorical draws.
inline std::vector<std::uint64_t> apportion_iid(const std::vector<MixtureEntry>& entries, std::uint64_t total,
                                                std::uint64_t seed) {
  const double sum = std::accumulate(entries.begin(), entries.end(), 0.0,
                                     [](double s, const MixtureEntry& e) { return s + e.ratio; });
  if (!(sum > 0.0)) throw Error(ErrorCode::AllRatiosZero, "no dataset has a positive ratio");
  std::vector<std::uint64_t> counts(entries.size(), 0);
  Rng rng(derive_seed(seed, "iid"));
  for (std::uint64_t d = 0; d < total; ++d) {
    double u = rng.uniform01() * sum;
    std::size_t pick = entries.size();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].ratio <= 0.0) continue;
      pick = i;
      if (u < entries[i].ratio) break;
      u -= entries[i].ratio;
    }
    ++counts[pick];
  }
  return counts;
}

struct MixtureDraw {
  std::string dataset;
  std::string id;

  bool operator==(const MixtureDraw&) const = default;
};

struct DatasetUsage {
  std::string name;
  double ratio = 0.0;
  std::uint64_t drawn = 0;
  std::uint64_t available = 0;
  bool with_replacement = false;  // the dataset ran out and was reused
};

struct MixtureResult {
  std::vector<MixtureDraw> stream;
  std::vector<DatasetUsage> usage;
};

enum class MixtureMode { Apportioned, Iid };

/// Draws spec.total ids across datasets and interleaves them with a seeded
/// shuffle. `pools[i]` lists the ids of spec.entries[i]. Within a dataset,
/// ids are drawn without replacement until exhausted, then with replacement.
inline MixtureResult mixture_sample(const MixtureSpec& spec, const std::vector<std::vector<std::string>>& pools,
                                    std::uint64_t seed, MixtureMode mode = MixtureMode::Apportioned) {
  validate_mixture(spec);
  if (pools.size() != spec.entries.size()) throw Error(ErrorCode::InvalidArgument, "one pool per dataset required");
  const auto counts =
      mode == MixtureMode::Apportioned ? apportion(spec.entries, spec.total) : apportion_iid(spec.entries, spec.total, seed);

  MixtureResult out;
  out.stream.reserve(spec.total);
  for (std::size_t i = 0; i < spec.entries.size(); ++i) {
    const auto& e = spec.entries[i];
    const auto& pool = pools[i];
    DatasetUsage u{e.name, e.ratio, counts[i], pool.size(), false};
    if (counts[i] > 0 && pool.empty()) throw Error(ErrorCode::EmptyDataset, e.name);
    Rng rng(derive_seed(seed, e.name));
    LazyShuffle shuffle(pool.size(), rng);
    for (std::uint64_t d = 0; d < counts[i]; ++d) {
      if (!shuffle.done()) {
        out.stream.push_back({e.name, pool[shuffle.next()]});
      } else {
        u.with_replacement = true;
        out.stream.push_back({e.name, pool[rng.below(pool.size())]});
      }
    }
    out.usage.push_back(u);
  }
  Rng mix(derive_seed(seed, "interleave"));
  for (std::size_t i = out.stream.size(); i > 1; --i) std::swap(out.stream[i - 1], out.stream[mix.below(i)]);
  return out;
}

/// {"total": n, "datasets": [{"name", "manifest", "ratio"}, ...]}; relative
/// manifest paths resolve against `base_dir`.
inline MixtureSpec mixture_from_json(const nlohmann::json& j, const std::string& base_dir = {}) {
  MixtureSpec spec;
  try {
    spec.total = j.at("total").get<std::uint64_t>();
    for (const auto& d : j.at("datasets")) {
      MixtureEntry e{d.at("name").get<std::string>(), d.value("manifest", std::string{}), d.at("ratio").get<double>()};
      if (!e.manifest.empty() && !base_dir.empty() && e.manifest.front() != '/') e.manifest = base_dir + "/" + e.manifest;
      spec.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("mixture config: ") + e.what());
  }
  validate_mixture(spec);
  return spec;
}

inline nlohmann::ordered_json to_json(const DatasetUsage& u) {
  nlohmann::ordered_json j;
  j["dataset"] = u.name;
  j["ratio"] = u.ratio;
  j["drawn"] = u.drawn;
  j["available"] = u.available;
  j["with_replacement"] = u.with_replacement;
  return j;
}

}  // namespace curate
