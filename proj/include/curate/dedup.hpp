#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "curate/error.hpp"
#include "curate/parallel.hpp"
#include "curate/sample.hpp"

namespace curate {

/// Indices into the input sequence; members ascend and members.front() is
/// the keeper. Groups are ordered by keeper.
struct DuplicateGroup {
  std::vector<std::size_t> members;

  std::size_t keeper() const { return members.front(); }
  bool operator==(const DuplicateGroup&) const = default;
};

/// Groups by identical content digest; only groups of two or more are
/// reported.
inline std::vector<DuplicateGroup> dedup_exact(std::span<const SampleRecord> records) {
  std::unordered_map<std::string_view, std::size_t> group_of;
  std::vector<DuplicateGroup> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = group_of.try_emplace(records[i].content_digest, groups.size());
    if (inserted) groups.push_back({{i}});
    else groups[it->second].members.push_back(i);
  }
  std::erase_if(groups, [](const DuplicateGroup& g) { return g.members.size() < 2; });
  return groups;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller index becomes the root, so a root is its set's minimum.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

namespace detail {
inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline std::vector<DuplicateGroup> groups_from(DisjointSets& sets, std::size_t n) {
  std::vector<DuplicateGroup> groups;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] == n) {
      slot[root] = groups.size();
      groups.push_back({});
    }
    groups[slot[root]].members.push_back(i);
  }
  std::erase_if(groups, [](const DuplicateGroup& g) { return g.members.size() < 2; });
  return groups;
}
}  // namespace detail

/// Single-linkage components over embedding vectors: i and j are linked
/// when their dot product is >= tau. Pair scanning runs on `workers` threads;
/// the union is sequential and the result does not depend on the worker count.
inline std::vector<DuplicateGroup> link_groups(std::span<const std::vector<double>* const> embs, double tau,
                                               std::size_t workers = 1) {
  const std::size_t n = embs.size();
  std::vector<std::vector<std::size_t>> links(n);  // later indices linked to i
  parallel_for(
      n, workers,
      [&](std::size_t i) {
        const auto& a = *embs[i];
        for (std::size_t j = i + 1; j < n; ++j)
          if (detail::dot(a, *embs[j]) >= tau) links[i].push_back(j);
      },
      4);
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : links[i]) sets.unite(i, j);
  return detail::groups_from(sets, n);
}

/// Semantic near-duplicates: single-linkage grouping where a cosine of at
/// least tau between (unit) embeddings links two records.
inline std::vector<DuplicateGroup> dedup_semantic(std::span<const SampleRecord> records, double tau,
                                                  std::size_t workers = 1) {
  std::vector<const std::vector<double>*> embs;
  embs.reserve(records.size());
  for (const auto& r : records) {
    if (!r.embedding) throw Error(ErrorCode::MissingEmbedding, r.id);
    if (!embs.empty() && r.embedding->size() != embs.front()->size())
      throw Error(ErrorCode::DimensionMismatch, "embedding of '" + r.id + "' has a different dimension");
    embs.push_back(&*r.embedding);
  }
  return link_groups(embs, tau, workers);
}

/// Indices that are not keepers of any group.
inline std::vector<bool> non_keeper_mask(const std::vector<DuplicateGroup>& groups, std::size_t n) {
  std::vector<bool> mask(n, false);
  for (const auto& g : groups)
    for (std::size_t k = 1; k < g.members.size(); ++k) mask[g.members[k]] = true;
  return mask;
}

}  // namespace curate
