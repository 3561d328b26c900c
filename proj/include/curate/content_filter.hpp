#pragma once

#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "curate/cascade.hpp"
#include "curate/error.hpp"
#include "curate/sample.hpp"

namespace curate {

/// One moderation rule: a category label and a keyword or wildcard pattern.
/// Keywords match as case-insensitive substrings. Patterns may use `*` (any
/// run of bytes) and `?` (one byte) and match anywhere in the caption.
struct CaptionRule {
  std::string category;
  std::string pattern;  // lower-cased at compile time
};

namespace detail {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Full-string glob match with `*` and `?`.
inline bool glob_match(std::string_view pat, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pat.size() && (pat[p] == '?' || pat[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

}  // namespace detail

class CaptionRuleSet {
 public:
  CaptionRuleSet() = default;

  /// Throws InvalidPattern for an empty category or a pattern that has no
  /// literal character (it would match every caption).
  void add(std::string_view category, std::string_view pattern) {
    category = detail::trim(category);
    pattern = detail::trim(pattern);
    if (category.empty()) throw Error(ErrorCode::InvalidPattern, "rule without category");
    if (pattern.find_first_not_of("*?") == std::string_view::npos)
      throw Error(ErrorCode::InvalidPattern, "pattern '" + std::string(pattern) + "' has no literal text");
    rules_.push_back({std::string(category), "*" + detail::ascii_lower(pattern) + "*"});
  }

  const std::vector<CaptionRule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

  /// Index of the first rule (declaration order) matching any caption text.
  std::optional<std::size_t> first_match(const std::vector<std::string>& lowered_texts) const {
    for (std::size_t i = 0; i < rules_.size(); ++i)
      for (const auto& t : lowered_texts)
        if (detail::glob_match(rules_[i].pattern, t)) return i;
    return std::nullopt;
  }

 private:
  std::vector<CaptionRule> rules_;
};

/// Rule file: one `category:pattern` per line; `#` comments and blank lines
/// are ignored.
inline CaptionRuleSet parse_caption_rules(std::istream& in) {
  CaptionRuleSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto colon = t.find(':');
    if (colon == std::string_view::npos)
      throw Error(ErrorCode::InvalidPattern, "line " + std::to_string(lineno) + ": expected 'category:pattern'");
    try {
      set.add(t.substr(0, colon), t.substr(colon + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidPattern, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return set;
}

inline CaptionRuleSet parse_caption_rules(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_caption_rules(in);
}

inline CaptionRuleSet load_caption_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open rule file " + path);
  return parse_caption_rules(in);
}

/// Built-in list covering composite layouts, watermarks/logos and
/// low-information screenshots or memes.
inline CaptionRuleSet default_caption_rules() {
  return parse_caption_rules(
      "collage:collage\n"
      "collage:split*screen\n"
      "collage:grid of * images\n"
      "collage:side-by-side comparison\n"
      "watermark:watermark\n"
      "watermark:logo overlay\n"
      "watermark:stock photo logo\n"
      "screenshot-meme:screenshot\n"
      "screenshot-meme:meme\n"
      "screenshot-meme:user interface\n");
}

inline FilterDecision caption_content_filter(const std::vector<Caption>& captions, const CaptionRuleSet& rules) {
  if (captions.empty() || rules.empty()) return FilterDecision::accept();
  std::vector<std::string> lowered;
  lowered.reserve(captions.size());
  for (const auto& c : captions) lowered.push_back(detail::ascii_lower(c.text));
  if (auto hit = rules.first_match(lowered))
    return FilterDecision::reject(RejectReason::ContentMatch, 0, rules.rules()[*hit].category);
  return FilterDecision::accept();
}

}  // namespace curate
