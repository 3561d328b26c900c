#pragma once

// Brute-force reference implementations. They share no code with the
// library beyond plain data types and the seeded generator, which the
// replay oracles must reproduce draw for draw.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "curate/random.hpp"

namespace oracle {

/// Connected components of the graph linking i, j when dot >= tau, via
/// repeated flood fill over the full adjacency matrix. Returns components of
/// size >= 2, members ascending, ordered by smallest member.
inline std::vector<std::vector<std::size_t>> single_linkage(const std::vector<std::vector<double>>& v, double tau) {
  const std::size_t n = v.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < v[i].size(); ++k) d += v[i][k] * v[j][k];
      adj[i][j] = i != j && d >= tau;
    }
  std::vector<int> label(n, -1);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    std::vector<std::size_t> comp{s}, stack{s};
    label[s] = static_cast<int>(comps.size());
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t w = 0; w < n; ++w)
        if (adj[u][w] && label[w] < 0) {
          label[w] = label[s];
          comp.push_back(w);
          stack.push_back(w);
        }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(comp);
  }
  std::erase_if(comps, [](const auto& c) { return c.size() < 2; });
  return comps;
}

/// Cosine of every tag against the query, full sort by (score desc, id asc).
inline std::vector<std::string> topk_exhaustive(const std::vector<double>& q, const std::vector<std::string>& ids,
                                                const std::vector<std::vector<double>>& vecs, std::size_t k) {
  auto norm = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double a : x) s += a * a;
    return std::sqrt(s);
  };
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    double d = 0.0;
    for (std::size_t k2 = 0; k2 < q.size(); ++k2) d += q[k2] * vecs[i][k2];
    all.emplace_back(d / (norm(q) * norm(vecs[i])), ids[i]);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

struct Cand {
  std::string id;
  double score;
};

/// Diversity sampling evaluated directly over a child -> parent map
/// (empty parent = root): try every level, shallow to deep.
inline std::vector<std::string> diversity_reference(const std::vector<Cand>& cands,
                                                    const std::map<std::string, std::string>& parent,
                                                    std::size_t target) {
  auto chain = [&](const std::string& id) {  // root first, id last
    std::vector<std::string> c{id};
    while (!parent.at(c.back()).empty()) c.push_back(parent.at(c.back()));
    std::reverse(c.begin(), c.end());
    return c;
  };
  std::size_t max_depth = 0;
  for (const auto& c : cands) max_depth = std::max(max_depth, chain(c.id).size() - 1);
  auto key = [&](const Cand& c, std::size_t level) {
    const auto ch = chain(c.id);
    return level < ch.size() ? ch[level] : c.id;
  };
  // Deepest qualifying level; with none, the level with the most groups
  // (earliest on ties).
  std::size_t level = 0, most = 0;
  bool found = false;
  for (std::size_t l = 0; l < max_depth; ++l) {
    std::set<std::string> groups;
    for (const auto& c : cands) groups.insert(key(c, l));
    if (groups.size() >= target) {
      level = l;
      found = true;
    } else if (!found && groups.size() > most) {
      most = groups.size();
      level = l;
    }
  }
  std::map<std::string, Cand> best;
  for (const auto& c : cands) {
    const std::string g = key(c, level);
    auto it = best.find(g);
    if (it == best.end() || c.score > it->second.score || (c.score == it->second.score && c.id < it->second.id))
      best[g] = c;
  }
  std::vector<Cand> kept;
  for (const auto& [g, c] : best) kept.push_back(c);
  std::sort(kept.begin(), kept.end(), [](const Cand& a, const Cand& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(target, kept.size()); ++i) out.push_back(kept[i].id);
  return out;
}

/// Rarest-first sampling with running dedup, replaying the library's draw
/// protocol: per-category generator seeded from (seed, category), forward
/// Fisher-Yates consumed one position at a time.
inline std::vector<std::pair<std::string, std::string>> rebalance_replay(
    const std::map<std::string, std::vector<std::string>>& streams,
    const std::map<std::string, std::pair<std::uint64_t, std::uint64_t>>& count_target, std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, std::string>> order;
  for (const auto& [cat, ct] : count_target) order.emplace_back(ct.first, cat);
  std::sort(order.begin(), order.end());
  std::vector<std::pair<std::string, std::string>> out;
  std::unordered_set<std::string> seen;
  for (const auto& [count, cat] : order) {
    const auto& ids = streams.at(cat);
    const std::uint64_t target = count_target.at(cat).second;
    curate::Rng rng(curate::derive_seed(seed, cat));
    std::vector<std::size_t> perm(ids.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::uint64_t taken = 0;
    for (std::size_t pos = 0; pos < perm.size() && taken < target; ++pos) {
      const std::size_t j = pos + static_cast<std::size_t>(rng.below(perm.size() - pos));
      std::swap(perm[pos], perm[j]);
      const std::string& id = ids[perm[pos]];
      if (seen.count(id)) continue;
      seen.insert(id);
      out.emplace_back(id, cat);
      ++taken;
    }
  }
  return out;
}

/// Hamilton apportionment by exact rational arithmetic on integer weights.
inline std::vector<std::uint64_t> hamilton(const std::vector<std::uint64_t>& weights,
                                           const std::vector<std::string>& names, std::uint64_t total) {
  std::uint64_t sum = 0;
  for (auto w : weights) sum += w;
  std::vector<std::uint64_t> out(weights.size());
  std::vector<std::pair<std::uint64_t, std::size_t>> rems;  // remainder numerator over `sum`
  std::uint64_t given = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[i] = weights[i] * total / sum;
    given += out[i];
    if (weights[i] > 0) rems.emplace_back(weights[i] * total % sum, i);
  }
  std::sort(rems.begin(), rems.end(), [&](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : names[a.second] < names[b.second];
  });
  for (std::size_t k = 0; given < total; ++k, ++given) ++out[rems[k].second];
  return out;
}

}  // namespace oracle
