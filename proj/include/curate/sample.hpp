#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include <json.hpp>

#include "curate/digest.hpp"
#include "curate/error.hpp"

namespace curate {

using ordered_json = nlohmann::ordered_json;

enum class CaptionKind { Short, Long, Extended, Structured };
enum class Language { En, Zh };

constexpr std::string_view to_string(CaptionKind k) {
  switch (k) {
    case CaptionKind::Short: return "short";
    case CaptionKind::Long: return "long";
    case CaptionKind::Extended: return "extended";
    case CaptionKind::Structured: return "structured";
  }
  return "short";
}

constexpr std::string_view to_string(Language l) { return l == Language::En ? "en" : "zh"; }

inline std::optional<CaptionKind> parse_caption_kind(std::string_view s) {
  if (s == "short") return CaptionKind::Short;
  if (s == "long") return CaptionKind::Long;
  if (s == "extended") return CaptionKind::Extended;
  if (s == "structured") return CaptionKind::Structured;
  return std::nullopt;
}

inline std::optional<Language> parse_language(std::string_view s) {
  if (s == "en") return Language::En;
  if (s == "zh") return Language::Zh;
  return std::nullopt;
}

struct Caption {
  CaptionKind kind = CaptionKind::Short;
  Language language = Language::En;
  std::string text;

  bool operator==(const Caption&) const = default;
};

/// One corpus item as it travels between pipeline stages.
struct SampleRecord {
  std::string id;
  std::string image_ref;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::string content_digest;
  std::vector<Caption> captions;
  std::vector<std::string> ocr_tokens;
  std::optional<std::vector<double>> embedding;
  std::optional<double> aesthetic_score;  // [0, 10]
  std::optional<double> artimuse_score;   // [0, 100]
  bool dense_text = false;
  bool nsfw = false;
  bool broken = false;
  std::string source;

  std::int64_t min_side() const { return width < height ? width : height; }

  bool operator==(const SampleRecord&) const = default;
};

/// Editing sample: source, optional references, instruction, target.
struct EditTriplet {
  SampleRecord source;
  std::vector<SampleRecord> references;
  std::string instruction;
  SampleRecord target;
  std::optional<std::map<std::string, std::string>> metadata;

  bool operator==(const EditTriplet&) const = default;
};

using ManifestRecord = std::variant<SampleRecord, EditTriplet>;

/// Manifest key of a record. Edit triplets are keyed by their target id.
inline const std::string& record_id(const ManifestRecord& r) {
  return std::holds_alternative<SampleRecord>(r) ? std::get<SampleRecord>(r).id
                                                 : std::get<EditTriplet>(r).target.id;
}

inline constexpr int kSchemaVersion = 1;

struct Manifest {
  std::vector<ManifestRecord> records;
  int schema_version = kSchemaVersion;

  bool operator==(const Manifest&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

inline constexpr double kUnitNormTolerance = 1e-6;

inline double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Every violated invariant, one message each; empty iff the record is valid.
inline std::vector<std::string> validate_record(const SampleRecord& r) {
  std::vector<std::string> out;
  if (r.id.empty()) out.emplace_back("id is empty");
  if (!r.broken) {
    if (r.width < 1) out.emplace_back("width must be >= 1");
    if (r.height < 1) out.emplace_back("height must be >= 1");
  }
  if (!is_md5_hex(r.content_digest)) out.emplace_back("content_digest is not 32 lowercase hex characters");
  if (r.embedding) {
    if (r.embedding->empty() || std::abs(l2_norm(*r.embedding) - 1.0) > kUnitNormTolerance)
      out.emplace_back("embedding not unit norm");
  }
  if (r.aesthetic_score && !(*r.aesthetic_score >= 0.0 && *r.aesthetic_score <= 10.0))
    out.emplace_back("aesthetic_score outside [0, 10]");
  if (r.artimuse_score && !(*r.artimuse_score >= 0.0 && *r.artimuse_score <= 100.0))
    out.emplace_back("artimuse_score outside [0, 100]");
  return out;
}

inline std::vector<std::string> validate_record(const EditTriplet& t) {
  std::vector<std::string> out;
  auto nested = [&out](std::string_view role, const SampleRecord& r) {
    for (auto& v : validate_record(r)) out.push_back(std::string(role) + ": " + v);
  };
  if (t.instruction.empty()) out.emplace_back("instruction is empty");
  if (t.source.id == t.target.id) out.emplace_back("source.id equals target.id");
  nested("source", t.source);
  nested("target", t.target);
  for (const auto& ref : t.references) nested("reference", ref);
  return out;
}

inline std::vector<std::string> validate_record(const ManifestRecord& r) {
  return std::visit([](const auto& x) { return validate_record(x); }, r);
}

// ---------------------------------------------------------------------------
// JSON mapping. Optional fields are written as explicit nulls.

inline ordered_json to_json(const SampleRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["image_ref"] = r.image_ref;
  j["width"] = r.width;
  j["height"] = r.height;
  j["content_digest"] = r.content_digest;
  ordered_json caps = ordered_json::array();
  for (const auto& c : r.captions) {
    ordered_json cj;
    cj["kind"] = to_string(c.kind);
    cj["language"] = to_string(c.language);
    cj["text"] = c.text;
    caps.push_back(std::move(cj));
  }
  j["captions"] = std::move(caps);
  j["ocr_tokens"] = r.ocr_tokens;
  j["embedding"] = r.embedding ? ordered_json(*r.embedding) : ordered_json(nullptr);
  j["aesthetic_score"] = r.aesthetic_score ? ordered_json(*r.aesthetic_score) : ordered_json(nullptr);
  j["artimuse_score"] = r.artimuse_score ? ordered_json(*r.artimuse_score) : ordered_json(nullptr);
  j["dense_text"] = r.dense_text;
  j["nsfw"] = r.nsfw;
  j["broken"] = r.broken;
  j["source"] = r.source;
  return j;
}

inline ordered_json to_json(const EditTriplet& t) {
  ordered_json j;
  j["source"] = to_json(t.source);
  ordered_json refs = ordered_json::array();
  for (const auto& r : t.references) refs.push_back(to_json(r));
  j["references"] = std::move(refs);
  j["instruction"] = t.instruction;
  j["target"] = to_json(t.target);
  if (t.metadata) {
    ordered_json m = ordered_json::object();
    for (const auto& [k, v] : *t.metadata) m[k] = v;
    j["metadata"] = std::move(m);
  } else {
    j["metadata"] = nullptr;
  }
  return j;
}

inline ordered_json to_json(const ManifestRecord& r) {
  return std::visit([](const auto& x) { return to_json(x); }, r);
}

namespace detail {

template <class J>
const J& require(const J& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::MalformedLine, std::string("missing field '") + key + "'");
  return *it;
}

template <class J>
std::string get_string(const J& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw Error(ErrorCode::MalformedLine, std::string("field '") + key + "' must be a string");
  return v.template get<std::string>();
}

template <class J>
std::int64_t get_int(const J& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number_integer())
    throw Error(ErrorCode::MalformedLine, std::string("field '") + key + "' must be an integer");
  return v.template get<std::int64_t>();
}

template <class J>
bool get_bool(const J& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_boolean()) throw Error(ErrorCode::MalformedLine, std::string("field '") + key + "' must be a boolean");
  return v.template get<bool>();
}

template <class J>
std::optional<double> get_opt_number(const J& j, const char* key) {
  const auto& v = require(j, key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) throw Error(ErrorCode::MalformedLine, std::string("field '") + key + "' must be a number or null");
  return v.template get<double>();
}

}  // namespace detail

template <class J>
SampleRecord sample_from_json(const J& j) {
  using namespace detail;
  if (!j.is_object()) throw Error(ErrorCode::MalformedLine, "record must be a JSON object");
  SampleRecord r;
  r.id = get_string(j, "id");
  r.image_ref = get_string(j, "image_ref");
  r.width = get_int(j, "width");
  r.height = get_int(j, "height");
  r.content_digest = get_string(j, "content_digest");
  const auto& caps = require(j, "captions");
  if (!caps.is_array()) throw Error(ErrorCode::MalformedLine, "field 'captions' must be an array");
  for (const auto& c : caps) {
    if (!c.is_object()) throw Error(ErrorCode::MalformedLine, "caption must be an object");
    const auto kind = parse_caption_kind(get_string(c, "kind"));
    const auto lang = parse_language(get_string(c, "language"));
    if (!kind) throw Error(ErrorCode::MalformedLine, "unknown caption kind");
    if (!lang) throw Error(ErrorCode::MalformedLine, "unknown caption language");
    r.captions.push_back({*kind, *lang, get_string(c, "text")});
  }
  const auto& toks = require(j, "ocr_tokens");
  if (!toks.is_array()) throw Error(ErrorCode::MalformedLine, "field 'ocr_tokens' must be an array");
  for (const auto& t : toks) {
    if (!t.is_string()) throw Error(ErrorCode::MalformedLine, "ocr token must be a string");
    r.ocr_tokens.push_back(t.template get<std::string>());
  }
  const auto& emb = require(j, "embedding");
  if (!emb.is_null()) {
    if (!emb.is_array()) throw Error(ErrorCode::MalformedLine, "field 'embedding' must be an array or null");
    std::vector<double> v;
    v.reserve(emb.size());
    for (const auto& x : emb) {
      if (!x.is_number()) throw Error(ErrorCode::MalformedLine, "embedding entries must be numbers");
      v.push_back(x.template get<double>());
    }
    r.embedding = std::move(v);
  }
  r.aesthetic_score = get_opt_number(j, "aesthetic_score");
  r.artimuse_score = get_opt_number(j, "artimuse_score");
  r.dense_text = get_bool(j, "dense_text");
  r.nsfw = get_bool(j, "nsfw");
  r.broken = get_bool(j, "broken");
  r.source = get_string(j, "source");
  return r;
}

template <class J>
EditTriplet triplet_from_json(const J& j) {
  using namespace detail;
  EditTriplet t;
  t.source = sample_from_json(require(j, "source"));
  const auto& refs = require(j, "references");
  if (!refs.is_array()) throw Error(ErrorCode::MalformedLine, "field 'references' must be an array");
  for (const auto& r : refs) t.references.push_back(sample_from_json(r));
  t.instruction = get_string(j, "instruction");
  t.target = sample_from_json(require(j, "target"));
  const auto& meta = require(j, "metadata");
  if (!meta.is_null()) {
    if (!meta.is_object()) throw Error(ErrorCode::MalformedLine, "field 'metadata' must be an object or null");
    std::map<std::string, std::string> m;
    for (auto it = meta.begin(); it != meta.end(); ++it) {
      if (!it.value().is_string()) throw Error(ErrorCode::MalformedLine, "metadata values must be strings");
      m[it.key()] = it.value().template get<std::string>();
    }
    t.metadata = std::move(m);
  }
  return t;
}

template <class J>
ManifestRecord record_from_json(const J& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedLine, "record must be a JSON object");
  if (j.contains("instruction")) return triplet_from_json(j);
  return sample_from_json(j);
}

// ---------------------------------------------------------------------------
// JSON-lines manifest I/O

struct ParseError {
  std::size_t line = 0;  // 1-based
  ErrorCode code = ErrorCode::MalformedLine;
  std::string message;
};

struct ParseResult {
  Manifest manifest;
  std::vector<ParseError> errors;

  bool ok() const { return errors.empty(); }
};

inline constexpr std::string_view kSchemaPrefix = "#schema=";

/// Reads a manifest. Bad lines are collected, never silently dropped; the
/// remaining lines still parse. A later line repeating an earlier id is
/// reported as DuplicateId and skipped.
inline ParseResult parse_manifest(std::istream& in) {
  ParseResult out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.starts_with(kSchemaPrefix)) {
      const auto ver = line.substr(kSchemaPrefix.size());
      if (lineno != 1 || ver != std::to_string(kSchemaVersion)) {
        out.errors.push_back({lineno, ErrorCode::UnsupportedSchema, "unsupported schema header '" + line + "'"});
      } else {
        out.manifest.schema_version = kSchemaVersion;
      }
      continue;
    }
    try {
      auto rec = record_from_json(ordered_json::parse(line));
      if (auto v = validate_record(rec); !v.empty()) {
        std::string msg = v.front();
        for (std::size_t i = 1; i < v.size(); ++i) msg += "; " + v[i];
        throw Error(ErrorCode::MalformedLine, msg);
      }
      const auto& id = record_id(rec);
      if (!seen.insert(id).second) {
        out.errors.push_back({lineno, ErrorCode::DuplicateId, "duplicate id '" + id + "'"});
        continue;
      }
      out.manifest.records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      out.errors.push_back({lineno, ErrorCode::MalformedLine, e.what()});
    } catch (const Error& e) {
      out.errors.push_back({lineno, e.code(), e.what()});
    }
  }
  return out;
}

inline ParseResult parse_manifest(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_manifest(in);
}

/// One JSON object per line, preceded by the schema header. An empty
/// manifest produces no output at all.
inline void write_manifest(const Manifest& m, std::ostream& out) {
  if (m.records.empty()) return;
  out << kSchemaPrefix << m.schema_version << '\n';
  for (const auto& r : m.records) out << to_json(r).dump() << '\n';
}

inline std::string write_manifest(const Manifest& m) {
  std::ostringstream out;
  write_manifest(m, out);
  return out.str();
}

/// Plain sample records of a manifest, in order; edit triplets are skipped.
inline std::vector<SampleRecord> samples_of(const Manifest& m) {
  std::vector<SampleRecord> out;
  for (const auto& r : m.records)
    if (std::holds_alternative<SampleRecord>(r)) out.push_back(std::get<SampleRecord>(r));
  return out;
}

inline Manifest manifest_of(std::vector<SampleRecord> samples) {
  Manifest m;
  m.records.reserve(samples.size());
  for (auto& s : samples) m.records.emplace_back(std::move(s));
  return m;
}

}  // namespace curate
