#include <gtest/gtest.h>

#include <random>
#include <string>

#include "curate/digest.hpp"
#include "curate/sample.hpp"
#include "support/fixtures.hpp"

using namespace curate;

namespace {

SampleRecord full_record() {
  auto r = fixtures::basic_record("a1", 640, 480);
  r.captions = {{CaptionKind::Long, Language::Zh, "一只猫"}, {CaptionKind::Structured, Language::En, "{\"cat\":1}"}};
  r.ocr_tokens = {"STOP"};
  r.embedding = fixtures::unit({3.0, 4.0});
  r.artimuse_score = 71.5;
  r.dense_text = true;
  return r;
}

EditTriplet triplet() {
  EditTriplet t;
  t.source = fixtures::basic_record("src");
  t.target = fixtures::basic_record("tgt");
  t.references = {fixtures::basic_record("ref")};
  t.instruction = "make the sky orange";
  t.metadata = std::map<std::string, std::string>{{"transform", "none"}};
  return t;
}

}  // namespace

TEST(Md5, KnownVectors) {
  EXPECT_EQ(md5_hex(""), "d41d8cd98f00b204e9800998ecf8427e");
  EXPECT_EQ(md5_hex("abc"), "900150983cd24fb0d6963f7d28e17f72");
  EXPECT_TRUE(is_md5_hex("900150983cd24fb0d6963f7d28e17f72"));
  EXPECT_FALSE(is_md5_hex("900150983CD24FB0D6963F7D28E17F72"));
  EXPECT_FALSE(is_md5_hex("abc"));
}

TEST(ValidateRecord, ValidRecordHasNoViolations) { EXPECT_TRUE(validate_record(full_record()).empty()); }

TEST(ValidateRecord, HalfNormEmbedding) {
  auto r = full_record();
  r.embedding = std::vector<double>{0.3, 0.4};
  const auto v = validate_record(r);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v.front(), "embedding not unit norm");
}

TEST(ValidateRecord, ZeroWidthUnlessBroken) {
  auto r = full_record();
  r.width = 0;
  EXPECT_EQ(validate_record(r).size(), 1u);
  r.broken = true;
  EXPECT_TRUE(validate_record(r).empty());
}

TEST(ValidateRecord, ListsEveryViolation) {
  auto r = full_record();
  r.id.clear();
  r.content_digest = "XYZ";
  r.aesthetic_score = 11.0;
  r.artimuse_score = -1.0;
  EXPECT_EQ(validate_record(r).size(), 4u);
}

TEST(ValidateTriplet, SameSourceAndTarget) {
  auto t = triplet();
  t.target.id = t.source.id;
  EXPECT_FALSE(validate_record(t).empty());
  t = triplet();
  t.instruction.clear();
  EXPECT_FALSE(validate_record(t).empty());
  EXPECT_TRUE(validate_record(triplet()).empty());
}

TEST(Manifest, EmptyStream) {
  const auto p = parse_manifest(std::string_view{});
  EXPECT_TRUE(p.ok());
  EXPECT_TRUE(p.manifest.records.empty());
  EXPECT_EQ(write_manifest(Manifest{}), "");
}

TEST(Manifest, ThreeLinesInOrder) {
  Manifest m = manifest_of({fixtures::basic_record("c"), fixtures::basic_record("a"), fixtures::basic_record("b")});
  const auto p = parse_manifest(write_manifest(m));
  ASSERT_TRUE(p.ok());
  ASSERT_EQ(p.manifest.records.size(), 3u);
  EXPECT_EQ(record_id(p.manifest.records[0]), "c");
  EXPECT_EQ(record_id(p.manifest.records[1]), "a");
  EXPECT_EQ(record_id(p.manifest.records[2]), "b");
}

TEST(Manifest, NegativeWidthIsReportedOthersParse) {
  const std::string good = to_json(fixtures::basic_record("g1")).dump();
  auto bad = to_json(fixtures::basic_record("b1"));
  bad["width"] = -5;
  const std::string good2 = to_json(fixtures::basic_record("g2")).dump();
  const auto p = parse_manifest(good + "\n" + bad.dump() + "\n" + good2 + "\n");
  ASSERT_EQ(p.errors.size(), 1u);
  EXPECT_EQ(p.errors[0].line, 2u);
  EXPECT_EQ(p.errors[0].code, ErrorCode::MalformedLine);
  EXPECT_EQ(p.manifest.records.size(), 2u);
}

TEST(Manifest, DuplicateIdReportedAndSkipped) {
  const std::string line = to_json(fixtures::basic_record("dup")).dump();
  const auto p = parse_manifest(line + "\n" + line + "\n");
  ASSERT_EQ(p.errors.size(), 1u);
  EXPECT_EQ(p.errors[0].code, ErrorCode::DuplicateId);
  EXPECT_EQ(p.manifest.records.size(), 1u);
}

TEST(Manifest, SchemaHeader) {
  EXPECT_TRUE(parse_manifest("#schema=1\n").ok());
  const auto p = parse_manifest("#schema=7\n");
  ASSERT_EQ(p.errors.size(), 1u);
  EXPECT_EQ(p.errors[0].code, ErrorCode::UnsupportedSchema);
}

TEST(Manifest, GarbageLine) {
  const auto p = parse_manifest("{not json\n");
  ASSERT_EQ(p.errors.size(), 1u);
  EXPECT_EQ(p.errors[0].code, ErrorCode::MalformedLine);
}

TEST(Manifest, RoundTripAllFields) {
  Manifest m;
  m.records.emplace_back(full_record());
  m.records.emplace_back(triplet());
  const std::string text = write_manifest(m);
  const auto p = parse_manifest(text);
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p.manifest.records, m.records);
  EXPECT_EQ(write_manifest(p.manifest), text);
}

TEST(Manifest, OptionalFieldsAreExplicitNulls) {
  auto r = fixtures::basic_record("n");
  r.aesthetic_score.reset();
  const auto j = to_json(r);
  ASSERT_TRUE(j.contains("embedding"));
  EXPECT_TRUE(j["embedding"].is_null());
  EXPECT_TRUE(j["aesthetic_score"].is_null());
  EXPECT_TRUE(j["artimuse_score"].is_null());
}

TEST(Manifest, ThousandRandomRecordsAreByteStable) {
  const auto recs = fixtures::synthetic_corpus(1000, 99);
  std::vector<SampleRecord> unique;
  std::set<std::string> ids;
  for (const auto& r : recs)
    if (ids.insert(r.id).second) unique.push_back(r);
  const Manifest m = manifest_of(unique);
  const std::string a = write_manifest(m);
  const std::string b = write_manifest(m);
  EXPECT_EQ(a, b);
  const auto p = parse_manifest(a);
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p.manifest.records, m.records);
}
