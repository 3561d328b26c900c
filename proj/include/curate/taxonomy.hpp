#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "curate/error.hpp"

namespace curate {

struct TagNodeSpec {
  std::string id;
  std::string parent_id;  // empty for a root
  std::string name;
};

/// Validated forest of tag nodes. Leaves are the tag vocabulary.
class TagTree {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  struct Node {
    std::string id;
    std::string name;
    std::size_t parent = npos;
    std::size_t depth = 0;
    std::vector<std::size_t> children;
  };

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::size_t>& leaves() const { return leaves_; }

  std::size_t index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? npos : it->second;
  }
  bool contains(std::string_view id) const { return index_of(id) != npos; }
  bool is_leaf(std::size_t i) const { return nodes_[i].children.empty(); }

  /// Ancestor of node i at the given depth (i itself when depth == depth(i)).
  std::size_t ancestor_at(std::size_t i, std::size_t depth) const {
    while (nodes_[i].depth > depth) i = nodes_[i].parent;
    return i;
  }

 private:
  friend TagTree build_tag_tree(const std::vector<TagNodeSpec>&);
  std::vector<Node> nodes_;
  std::vector<std::size_t> leaves_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline TagTree build_tag_tree(const std::vector<TagNodeSpec>& specs) {
  TagTree t;
  t.nodes_.reserve(specs.size());
  for (const auto& s : specs) {
    if (s.id.empty()) throw Error(ErrorCode::InvalidArgument, "tag node with empty id");
    if (!t.index_.emplace(s.id, t.nodes_.size()).second) throw Error(ErrorCode::DuplicateId, s.id);
    t.nodes_.push_back({s.id, s.name, TagTree::npos, 0, {}});
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].parent_id.empty()) continue;
    auto it = t.index_.find(specs[i].parent_id);
    if (it == t.index_.end()) throw Error(ErrorCode::OrphanNode, specs[i].id);
    t.nodes_[i].parent = it->second;
    t.nodes_[it->second].children.push_back(i);
  }

  // Breadth-first from the roots; nodes never reached sit on a cycle or hang
  // below one.
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < t.nodes_.size(); ++i)
    if (t.nodes_[i].parent == TagTree::npos) queue.push_back(i);
  std::vector<bool> reached(t.nodes_.size(), false);
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const std::size_t u = queue[h];
    reached[u] = true;
    for (std::size_t c : t.nodes_[u].children) {
      t.nodes_[c].depth = t.nodes_[u].depth + 1;
      queue.push_back(c);
    }
  }
  std::string cyclic;
  for (std::size_t i = 0; i < t.nodes_.size(); ++i)
    if (!reached[i]) cyclic += (cyclic.empty() ? "" : ",") + t.nodes_[i].id;
  if (!cyclic.empty()) throw Error(ErrorCode::Cycle, cyclic);

  for (std::size_t i = 0; i < t.nodes_.size(); ++i)
    if (t.nodes_[i].children.empty()) t.leaves_.push_back(i);
  return t;
}

/// Tag-tree file: `id<TAB>parent_id<TAB>name` per line; an empty parent_id
/// marks a root. Blank lines and `#` comments are skipped.
inline std::vector<TagNodeSpec> parse_tag_tree(std::istream& in) {
  std::vector<TagNodeSpec> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw Error(ErrorCode::MalformedLine, "tag tree line " + std::to_string(lineno) + ": expected 3 fields");
    out.push_back({line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), line.substr(t2 + 1)});
  }
  return out;
}

inline TagTree load_tag_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open tag tree " + path);
  return build_tag_tree(parse_tag_tree(in));
}

/// Tag vocabulary embeddings stored row-major.
struct TagEmbeddings {
  std::vector<std::string> ids;
  std::vector<double> data;
  std::size_t dim = 0;

  std::size_t size() const { return ids.size(); }
  const double* row(std::size_t i) const { return data.data() + i * dim; }

  void add(std::string id, const std::vector<double>& v) {
    if (ids.empty() && dim == 0) dim = v.size();
    if (v.size() != dim || dim == 0)
      throw Error(ErrorCode::DimensionMismatch, "embedding of tag '" + id + "' has dimension " +
                                                    std::to_string(v.size()) + ", expected " + std::to_string(dim));
    ids.push_back(std::move(id));
    data.insert(data.end(), v.begin(), v.end());
  }
};

/// JSON-lines of {"tag_id": ..., "embedding": [...]}.
inline TagEmbeddings load_tag_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open tag embeddings " + path);
  TagEmbeddings out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.add(j.at("tag_id").get<std::string>(), j.at("embedding").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

struct TagCandidate {
  std::string tag_id;
  double score = 0.0;

  bool operator==(const TagCandidate&) const = default;
};

inline bool ranks_before(const TagCandidate& a, const TagCandidate& b) {
  return a.score != b.score ? a.score > b.score : a.tag_id < b.tag_id;
}

/// The k vocabulary tags with the highest cosine similarity to the query,
/// descending by score with ties broken by ascending tag id. The query is
/// normalized, so any positive rescaling gives the same result.
inline std::vector<TagCandidate> tag_topk(const std::vector<double>& query, const TagEmbeddings& vocab,
                                          std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (vocab.size() == 0) throw Error(ErrorCode::EmptyVocabulary, "tag vocabulary is empty");
  if (query.size() != vocab.dim)
    throw Error(ErrorCode::DimensionMismatch, "query has dimension " + std::to_string(query.size()) +
                                                  ", vocabulary " + std::to_string(vocab.dim));
  double norm = 0.0;
  for (double x : query) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw Error(ErrorCode::InvalidArgument, "query embedding is zero");

  std::vector<TagCandidate> all(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const double* r = vocab.row(i);
    double s = 0.0;
    for (std::size_t d = 0; d < vocab.dim; ++d) s += query[d] * r[d];
    all[i] = {vocab.ids[i], std::clamp(s / norm, -1.0, 1.0)};
  }
  const std::size_t m = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m), all.end(), ranks_before);
  all.resize(m);
  return all;
}

/// Keeps at most one candidate per ancestor subtree at an adaptively chosen
/// level, then returns the best `target` of those.
///
/// Levels range over the depths of proper ancestors of the candidates. L is
/// the deepest level whose number of groups reaches `target`; when none
/// does, L is the deepest level (the one with the most groups). A candidate
/// shallower than L forms its own group.
inline std::vector<std::string> diversity_sample(const std::vector<TagCandidate>& candidates, const TagTree& tree,
                                                 std::size_t target) {
  if (target < 1) throw Error(ErrorCode::InvalidArgument, "target must be at least 1");
  std::vector<std::size_t> idx(candidates.size());
  std::size_t max_depth = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const std::size_t i = tree.index_of(candidates[c].tag_id);
    if (i == TagTree::npos || !tree.is_leaf(i)) throw Error(ErrorCode::CandidateNotInTree, candidates[c].tag_id);
    idx[c] = i;
    max_depth = std::max(max_depth, tree.node(i).depth);
  }
  if (candidates.empty()) return {};

  auto group_key = [&](std::size_t c, std::size_t level) {
    return tree.node(idx[c]).depth <= level ? idx[c] : tree.ancestor_at(idx[c], level);
  };

  std::size_t level = max_depth > 0 ? max_depth - 1 : 0;
  for (std::size_t l = max_depth; l-- > 0;) {
    std::set<std::size_t> groups;
    for (std::size_t c = 0; c < candidates.size(); ++c) groups.insert(group_key(c, l));
    if (groups.size() >= target) {
      level = l;
      break;
    }
  }

  std::map<std::size_t, std::size_t> best;  // group -> candidate
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    auto [it, inserted] = best.try_emplace(group_key(c, level), c);
    if (!inserted && ranks_before(candidates[c], candidates[it->second])) it->second = c;
  }
  std::vector<TagCandidate> kept;
  kept.reserve(best.size());
  for (const auto& [g, c] : best) kept.push_back(candidates[c]);
  std::sort(kept.begin(), kept.end(), ranks_before);
  if (kept.size() > target) kept.resize(target);

  std::vector<std::string> out;
  out.reserve(kept.size());
  for (auto& k : kept) out.push_back(std::move(k.tag_id));
  return out;
}

}  // namespace curate
