#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "curate/parallel.hpp"
#include "curate/sample.hpp"

namespace curate {

/// Outcome of the three OCR/caption fidelity constraints for one caption.
/// Each flag is true exactly when its list is empty.
struct OcrFidelityReport {
  bool coverage_ok = true;
  bool consistency_ok = true;
  bool language_ok = true;
  std::vector<std::string> missing_tokens;
  std::vector<std::string> hallucinated_quotes;
  std::vector<std::string> translated_tokens;

  bool ok() const { return coverage_ok && consistency_ok && language_ok; }
  bool operator==(const OcrFidelityReport&) const = default;
};

inline nlohmann::ordered_json to_json(const OcrFidelityReport& r) {
  nlohmann::ordered_json j;
  j["coverage_ok"] = r.coverage_ok;
  j["consistency_ok"] = r.consistency_ok;
  j["language_ok"] = r.language_ok;
  j["missing_tokens"] = r.missing_tokens;
  j["hallucinated_quotes"] = r.hallucinated_quotes;
  j["translated_tokens"] = r.translated_tokens;
  return j;
}

namespace utf8 {

struct CodePoint {
  char32_t cp;
  std::size_t offset;  // byte offset of the first byte
  std::size_t length;  // encoded length in bytes
};

/// Lenient decoder: an invalid byte decodes as U+FFFD of length 1.
inline std::vector<CodePoint> decode(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = 0xFFFD;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 >> 5) == 0x6) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 >> 4) == 0xE) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 >> 3) == 0x1E) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back({0xFFFD, i, 1});
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back({0xFFFD, i, 1});
      ++i;
      continue;
    }
    bool valid = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b >> 6) != 0x2) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!valid) {
      out.push_back({0xFFFD, i, 1});
      ++i;
      continue;
    }
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

}  // namespace utf8

enum class Script { Latin, Cjk, Digit, Other };

inline bool is_cjk(char32_t c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) || (c >= 0x20000 && c <= 0x2A6DF) ||
         (c >= 0xF900 && c <= 0xFAFF) || (c >= 0x3040 && c <= 0x30FF) || (c >= 0xAC00 && c <= 0xD7AF);
}

inline bool is_latin_letter(char32_t c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= 0xC0 && c <= 0x24F && c != 0xD7 && c != 0xF7);
}

inline bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

/// CJK if any CJK character, else Latin if any Latin letter, else Digit if
/// any digit, else Other.
inline Script script_of(std::string_view token) {
  bool latin = false, digit = false;
  for (const auto& cp : utf8::decode(token)) {
    if (is_cjk(cp.cp)) return Script::Cjk;
    latin = latin || is_latin_letter(cp.cp);
    digit = digit || is_digit(cp.cp);
  }
  if (latin) return Script::Latin;
  if (digit) return Script::Digit;
  return Script::Other;
}

namespace detail {

struct QuotePair {
  char32_t open;
  char32_t close;
  bool word_sensitive;  // also serves as an apostrophe
};

inline constexpr std::array<QuotePair, 8> kQuotePairs{{
    {U'"', U'"', false},
    {U'\'', U'\'', true},
    {U'“', U'”', false},
    {U'‘', U'’', true},
    {U'「', U'」', false},
    {U'『', U'』', false},
    {U'«', U'»', false},
    {U'‹', U'›', false},
}};

inline bool is_wordish(char32_t c) {
  return (c < 0x80 && std::isalnum(static_cast<int>(c))) || is_latin_letter(c) || is_cjk(c);
}

}  // namespace detail

struct QuoteScan {
  std::vector<std::string> spans;  // text between paired quote marks, in order
  std::vector<std::string> unbalanced;  // unterminated remainder / stray closer
};

/// Extracts quoted spans with first-match pairing (no nesting). ASCII `'`
/// and U+2018/2019 only act as quote marks at word boundaries, so
/// apostrophes inside words are ignored.
inline QuoteScan extract_quoted_spans(std::string_view text) {
  const auto cps = utf8::decode(text);
  QuoteScan out;
  auto prev_wordish = [&](std::size_t i) { return i > 0 && detail::is_wordish(cps[i - 1].cp); };
  auto next_wordish = [&](std::size_t i) { return i + 1 < cps.size() && detail::is_wordish(cps[i + 1].cp); };

  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i].cp;
    const detail::QuotePair* pair = nullptr;
    for (const auto& q : detail::kQuotePairs)
      if (q.open == c && !(q.word_sensitive && prev_wordish(i))) {
        pair = &q;
        break;
      }
    if (!pair) {
      for (const auto& q : detail::kQuotePairs)
        if (q.close == c && q.open != q.close && !(q.word_sensitive && (prev_wordish(i) || next_wordish(i)))) {
          out.unbalanced.push_back(std::string(text.substr(cps[i].offset, cps[i].length)));
          break;
        }
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < cps.size() && !(cps[j].cp == pair->close && !(pair->word_sensitive && next_wordish(j)))) ++j;
    if (j == cps.size()) {
      out.unbalanced.push_back(std::string(text.substr(cps[i].offset)));
      break;
    }
    const std::size_t begin = cps[i].offset + cps[i].length;
    std::string span(text.substr(begin, cps[j].offset - begin));
    if (!span.empty()) out.spans.push_back(std::move(span));
    i = j + 1;
  }
  return out;
}

/// Rule-based fidelity check:
///   coverage    every OCR token occurs verbatim in the caption;
///   consistency every quoted span equals or is contained in some OCR token
///               (unbalanced quotes count as inconsistent);
///   language    for every script class present among the tokens, at least
///               one token of that class occurs verbatim.
inline OcrFidelityReport check_ocr_caption(std::string_view caption, const std::vector<std::string>& ocr_tokens) {
  OcrFidelityReport r;
  std::set<std::string_view> seen;
  for (const auto& t : ocr_tokens) {
    if (t.empty() || !seen.insert(t).second) continue;
    if (caption.find(t) == std::string_view::npos) r.missing_tokens.push_back(t);
  }

  auto scan = extract_quoted_spans(caption);
  for (auto& span : scan.spans) {
    const bool grounded = std::any_of(ocr_tokens.begin(), ocr_tokens.end(),
                                      [&](const std::string& t) { return t.find(span) != std::string::npos; });
    if (!grounded) r.hallucinated_quotes.push_back(std::move(span));
  }
  for (auto& u : scan.unbalanced) r.hallucinated_quotes.push_back(std::move(u));

  std::array<bool, 4> present{}, verbatim{};
  for (const auto& t : ocr_tokens) {
    if (t.empty()) continue;
    const auto s = static_cast<std::size_t>(script_of(t));
    present[s] = true;
    if (caption.find(t) != std::string_view::npos) verbatim[s] = true;
  }
  seen.clear();
  for (const auto& t : ocr_tokens) {
    if (t.empty() || !seen.insert(t).second) continue;
    const auto s = static_cast<std::size_t>(script_of(t));
    if (present[s] && !verbatim[s]) r.translated_tokens.push_back(t);
  }

  r.coverage_ok = r.missing_tokens.empty();
  r.consistency_ok = r.hallucinated_quotes.empty();
  r.language_ok = r.translated_tokens.empty();
  return r;
}

/// Replaceable fidelity checker; the default applies the rules above.
class FidelityChecker {
 public:
  virtual ~FidelityChecker() = default;
  virtual OcrFidelityReport check(std::string_view caption, const std::vector<std::string>& ocr_tokens) const {
    return check_ocr_caption(caption, ocr_tokens);
  }
};

enum class FidelityMode {
  DropRecord,   // any failing caption rejects the whole record
  DropCaption,  // failing captions are removed; rejected only if none remain
};

struct CaptionReport {
  std::size_t caption_index = 0;
  OcrFidelityReport report;
};

struct FidelityRejection {
  SampleRecord record;
  std::vector<CaptionReport> failures;
};

struct FidelityResult {
  std::vector<SampleRecord> kept;
  std::vector<FidelityRejection> rejected;
};

inline nlohmann::ordered_json to_json(const FidelityRejection& r) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& f : r.failures) {
    nlohmann::ordered_json j;
    j["caption_index"] = f.caption_index;
    j["report"] = to_json(f.report);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline FidelityResult filter_by_fidelity(std::span<const SampleRecord> records,
                                         FidelityMode mode = FidelityMode::DropRecord,
                                         const FidelityChecker* checker = nullptr, std::size_t workers = 1) {
  static const FidelityChecker kRules;
  const FidelityChecker& chk = checker ? *checker : kRules;
  const auto failures = parallel_map<std::vector<CaptionReport>>(records.size(), workers, [&](std::size_t i) {
    std::vector<CaptionReport> f;
    const auto& r = records[i];
    for (std::size_t c = 0; c < r.captions.size(); ++c) {
      auto rep = chk.check(r.captions[c].text, r.ocr_tokens);
      if (!rep.ok()) f.push_back({c, std::move(rep)});
    }
    return f;
  });

  FidelityResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& f = failures[i];
    if (f.empty()) {
      out.kept.push_back(r);
    } else if (mode == FidelityMode::DropCaption && f.size() < r.captions.size()) {
      SampleRecord trimmed = r;
      trimmed.captions.clear();
      std::size_t k = 0;
      for (std::size_t c = 0; c < r.captions.size(); ++c) {
        if (k < f.size() && f[k].caption_index == c) {
          ++k;
          continue;
        }
        trimmed.captions.push_back(r.captions[c]);
      }
      out.kept.push_back(std::move(trimmed));
    } else {
      out.rejected.push_back({r, f});
    }
  }
  return out;
}

}  // namespace curate
