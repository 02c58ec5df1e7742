#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "asc/corpus.hpp"
#include "asc/error.hpp"
#include "testkit.hpp"

using namespace asc;

namespace {

SnippetRecord x_eq_1() {
  SnippetRecord r;
  r.id = "a";
  r.source = "x=1";
  r.tokens = {{"x", 0, 1, std::nullopt}, {"=", 1, 2, 0.5}, {"1", 2, 3, 0.25}};
  return r;
}

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "asc_test_corpus";
  std::filesystem::create_directories(dir);
  return dir / name;
}

bool has_rule(const std::vector<Violation>& v, std::string_view rule) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.rule == rule; });
}

}  // namespace

TEST_CASE("single record loads unchanged") {
  const auto path = temp_file("one.jsonl");
  save_corpus({x_eq_1()}, path);
  const auto loaded = load_corpus(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0] == x_eq_1());
}

TEST_CASE("empty file gives empty corpus") {
  const auto path = temp_file("empty.jsonl");
  save_corpus({}, path);
  CHECK(std::filesystem::file_size(path) == 0);
  CHECK(load_corpus(path).empty());
}

TEST_CASE("mutated token text is rejected naming the snippet") {
  SnippetRecord r = x_eq_1();
  r.tokens[1].text = "+";
  const auto path = temp_file("mismatch.jsonl");
  {
    std::ofstream out(path);
    out << to_json(r).dump() << "\n";
  }
  try {
    load_corpus(path);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.snippet_id() == "a");
    CHECK(e.rule() == rules::kTextMismatch);
  }
}

TEST_CASE("malformed lines report line number and field") {
  const std::string text = to_json(x_eq_1()).dump() + "\n\n{\"id\": \"b\", \"source\": 3}\n";
  try {
    parse_corpus(text);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "source");
  }
  CHECK_THROWS_AS(parse_corpus("{not json}\n"), FormatError);
  CHECK_THROWS_AS(parse_corpus("{\"id\":\"a\",\"source\":\"x\",\"tokens\":[{\"text\":\"x\",\"start_byte\":-1,"
                               "\"end_byte\":1}]}\n"),
                  FormatError);
}

TEST_CASE("duplicate ids are rejected") {
  const std::string line = to_json(x_eq_1()).dump() + "\n";
  CHECK_THROWS_AS(parse_corpus(line + line), ValidationError);
}

TEST_CASE("validate reports each rule") {
  CHECK(validate(x_eq_1()).empty());

  SnippetRecord overlap = x_eq_1();
  overlap.tokens[1] = {"=1", 1, 3, 0.5};
  overlap.tokens[2] = {"1", 2, 3, 0.5};
  auto v = validate(overlap);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == rules::kSpansOverlap);

  SnippetRecord high = x_eq_1();
  high.tokens[1].ntp = 1.5;
  v = validate(high);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == rules::kNtpRange);

  SnippetRecord no_id = x_eq_1();
  no_id.id.clear();
  CHECK(has_rule(validate(no_id), rules::kEmptyId));

  SnippetRecord empty_span = x_eq_1();
  empty_span.tokens[2] = {"", 3, 3, 0.5};
  CHECK(has_rule(validate(empty_span), rules::kEmptySpan));

  SnippetRecord outside = x_eq_1();
  outside.tokens[2] = {"1", 2, 4, 0.5};
  CHECK(has_rule(validate(outside), rules::kSpanOutOfSource));

  SnippetRecord loss = x_eq_1();
  loss.loss = -0.1;
  CHECK(has_rule(validate(loss), rules::kNegativeLoss));

  SnippetRecord feats = x_eq_1();
  feats.features = CodeFeatures{};
  feats.features->cyclomatic = 0;
  CHECK(has_rule(validate(feats), rules::kFeatureRange));

  SnippetRecord bad_utf8 = x_eq_1();
  bad_utf8.source = "x=\xff";
  bad_utf8.tokens.pop_back();
  CHECK(has_rule(validate(bad_utf8), rules::kInvalidUtf8));
}

TEST_CASE("non-ASCII sources keep byte offsets") {
  SnippetRecord r;
  r.id = "u";
  r.source = "\xc3\xa9=1";  // "é=1": é is two bytes
  r.tokens = {{"\xc3\xa9", 0, 2, std::nullopt}, {"=", 2, 3, 0.9}, {"1", 3, 4, 0.8}};
  CHECK(validate(r).empty());
  const auto back = parse_corpus(serialize_corpus({r}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].tokens[1].start_byte == 2);
  CHECK(back[0].tokens[2].end_byte == 4);
  CHECK(back[0] == r);
}

TEST_CASE("unknown keys and metadata survive a round trip") {
  const std::string line =
      R"({"id":"k","source":"x","tokens":[{"text":"x","start_byte":0,"end_byte":1,"ntp":null}],"loss":null,)"
      R"("features":null,"metadata":{"repo":"r","commit":"fix"},"model":"m-1","extra":{"a":[1,2]}})";
  const auto records = parse_corpus(line + "\n");
  REQUIRE(records.size() == 1);
  CHECK(records[0].metadata.at("repo") == "r");
  CHECK(records[0].extra.at("model") == "m-1");
  const auto again = parse_corpus(serialize_corpus(records));
  CHECK(again == records);
  CHECK(serialize_corpus(again) == serialize_corpus(records));
}

TEST_CASE("property: random corpora round-trip through save and load") {
  std::mt19937_64 rng(11);
  std::vector<SnippetRecord> records;
  for (int i = 0; i < 10; ++i) {
    SnippetRecord s = testkit::random_snippet(rng, "r" + std::to_string(i));
    if (i % 2) s.loss = 0.125 * i;
    if (i % 3 == 0) s.features = CodeFeatures{3, 4, static_cast<std::int64_t>(s.tokens.size()), 9, 4, 0, 2,
                                              static_cast<std::int64_t>(s.tokens.size()) - 1};
    s.metadata["n"] = std::to_string(i);
    records.push_back(std::move(s));
  }
  for (const auto& r : records) REQUIRE(validate(r).empty());
  const auto path = temp_file("random.jsonl");
  save_corpus(records, path);
  CHECK(load_corpus(path) == records);
}

TEST_CASE("unwritable and missing paths raise io errors") {
  CHECK_THROWS_AS(save_corpus({x_eq_1()}, "/nonexistent-dir/x/y.jsonl"), IoError);
  CHECK_THROWS_AS(load_corpus("/nonexistent-dir/none.jsonl"), IoError);
}

TEST_CASE("utf-8 scanner") {
  CHECK_FALSE(find_invalid_utf8("plain ascii").has_value());
  CHECK_FALSE(find_invalid_utf8("\xe2\x82\xac").has_value());
  CHECK(find_invalid_utf8("ab\xc3").value() == 2);
  CHECK(find_invalid_utf8("\xc0\xaf").value() == 0);  // overlong
  CHECK(find_invalid_utf8("\xed\xa0\x80").value() == 0);  // surrogate
}

TEST_CASE("extractor-style lines load and their loss matches a recomputation") {
  // What an offline extractor writes: null first ntp, 9 significant digits,
  // byte offsets over multi-byte characters, an optional loss.
  const std::string line =
      R"({"id":"ext-1","source":"é=1\n","tokens":[{"text":"é","start_byte":0,"end_byte":2,"ntp":null},)"
      R"({"text":"=","start_byte":2,"end_byte":3,"ntp":0.123456789},)"
      R"({"text":"1","start_byte":3,"end_byte":4,"ntp":0.987654321},)"
      R"({"text":"\n","start_byte":4,"end_byte":5,"ntp":0.5}],)"
      R"("loss":0.932477924,"features":null,"metadata":{"model":"tiny"}})"
      "\n";
  const auto corpus = parse_corpus(line);
  REQUIRE(corpus.size() == 1);
  const SnippetRecord& r = corpus[0];
  CHECK(validate(r).empty());
  CHECK(r.tokens[0].ntp == std::nullopt);
  CHECK(r.tokens[1].ntp == 0.123456789);
  CHECK(r.metadata.at("model") == "tiny");
  const double recomputed = -(std::log(0.123456789) + std::log(0.987654321) + std::log(0.5)) / 3.0;
  REQUIRE(r.loss.has_value());
  CHECK(std::fabs(*r.loss - recomputed) < 1e-6);
  CHECK(parse_corpus(serialize_corpus(corpus)) == corpus);
}

TEST_CASE("zero-width special-token records are rejected") {
  SnippetRecord r = x_eq_1();
  r.tokens.insert(r.tokens.begin(), TokenRecord{"", 0, 0, std::nullopt});
  const auto v = validate(r);
  CHECK(has_rule(v, rules::kEmptySpan));
}
