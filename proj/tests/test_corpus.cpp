#include <algorithm>
#include <set>

#include "doctest.h"
#include "xlner/corpus.hpp"
#include "xlner/error.hpp"
#include "xlner/rng.hpp"
#include "xlner/synthetic.hpp"

using namespace xlner;

namespace {

// Spans by direct scan: a B-x opens a span that absorbs following I-x.
std::vector<Span> scan_spans(const std::vector<TagId>& tags, const TagSet& ts) {
  std::vector<Span> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!ts.is_begin(tags[i])) continue;
    std::size_t j = i + 1;
    while (j < tags.size() && tags[j] == ts.inside_tag(ts.type_of(tags[i]))) ++j;
    out.push_back({static_cast<int>(i), static_cast<int>(j), ts.type_of(tags[i])});
  }
  return out;
}

Corpus numbered_corpus(std::size_t n) {
  Corpus c;
  for (std::size_t i = 0; i < n; ++i) c.push_back({{{"s" + std::to_string(i)}, "gl"}, {0}});
  return c;
}

std::set<std::string> ids(const Corpus& c) {
  std::set<std::string> out;
  for (const auto& ls : c) out.insert(ls.sentence.tokens[0]);
  return out;
}

}  // namespace

TEST_CASE("tag inventory") {
  TagSet ts;
  CHECK(ts.size() == 9);
  CHECK(ts.find("O") == 0);
  CHECK(ts.name(0) == "O");
  CHECK(ts.bos_index() >= ts.size());
  CHECK(ts.find("B-PER") == ts.begin_tag(0));
  CHECK(ts.find("i-misc") == ts.inside_tag(3));
  CHECK(ts.find("B-FOO") == -1);
  for (int t = 0; t < ts.size(); ++t) CHECK(ts.find(ts.name(t)) == t);
}

TEST_CASE("parse_conll maps tags and repairs invalid I-") {
  TagSet ts;
  auto r = parse_conll("U.N. B-ORG\nofficial O\nEkeus B-PER\n", "gl", ts);
  REQUIRE(r.sentences.size() == 1);
  CHECK(r.sentences[0].tags == std::vector<TagId>{ts.find("B-ORG"), 0, ts.find("B-PER")});
  CHECK(r.sentences[0].sentence.language == "gl");
  CHECK(r.repair_count == 0);

  r = parse_conll("a I-LOC\n", "gl", ts);
  REQUIRE(r.sentences.size() == 1);
  CHECK(r.sentences[0].tags == std::vector<TagId>{ts.find("B-LOC")});
  CHECK(r.repair_count == 1);

  r = parse_conll("a\tB-PER\nb\tI-LOC\n\n\nc O\n", "gl", ts);
  CHECK(r.sentences.size() == 2);
  CHECK(r.sentences[0].tags[1] == ts.find("B-LOC"));
  CHECK(r.repair_count == 1);
}

TEST_CASE("parse_conll errors") {
  TagSet ts;
  CHECK(parse_conll("", "gl", ts).sentences.empty());
  CHECK(parse_conll("\n\n", "gl", ts).sentences.empty());
  try {
    parse_conll("a O\nb B-FOO\n", "gl", ts);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kData);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_conll("a b O\n", "gl", ts), Error);
  CHECK_THROWS_AS(parse_conll("a\n", "gl", ts), Error);
  CHECK_THROWS_AS(parse_conll("\xff O\n", "gl", ts), Error);
}

TEST_CASE("serialize and parse round-trip on a 50-sentence fixture") {
  TagSet ts;
  const Corpus fixture = generate_synthetic(synthetic_language(0), 50, 3, ts);
  const std::string text = serialize_conll(fixture, ts);
  const auto once = parse_conll(text, "qa", ts).sentences;
  CHECK(once == fixture);
  const auto twice = parse_conll(serialize_conll(once, ts), "qa", ts).sentences;
  CHECK(twice == once);
  CHECK(serialize_conll(once, ts) == text);
  CHECK(text.back() == '\n');
}

TEST_CASE("parse_tokens ignores the tag column") {
  const auto s = parse_tokens("a O\nb\n\nc B-PER\n", "gl");
  REQUIRE(s.size() == 2);
  CHECK(s[0].tokens == std::vector<std::string>{"a", "b"});
  CHECK(parse_tokens("", "gl").empty());
}

TEST_CASE("bio_spans examples") {
  TagSet ts;
  const TagId bp = ts.find("B-PER"), ip = ts.find("I-PER"), bl = ts.find("B-LOC"), il = ts.find("I-LOC");
  CHECK(bio_spans({bp, ip, 0}, ts) == std::vector<Span>{{0, 2, 0}});
  CHECK(bio_spans({0, 0, 0}, ts).empty());
  CHECK(bio_spans({bl, bl, il}, ts) == std::vector<Span>{{0, 1, 1}, {1, 3, 1}});
  CHECK_THROWS_AS(bio_spans({0, ip}, ts), Error);
}

TEST_CASE("bio_spans agrees with a scan oracle on every length-3 sequence") {
  TagSet ts;
  int consistent = 0;
  for (TagId a = 0; a < 9; ++a) {
    for (TagId b = 0; b < 9; ++b) {
      for (TagId c = 0; c < 9; ++c) {
        const std::vector<TagId> tags = {a, b, c};
        if (!is_bio_consistent(tags, ts)) {
          CHECK_THROWS(bio_spans(tags, ts));
          auto fixed = tags;
          repair_bio(fixed, ts);
          CHECK(is_bio_consistent(fixed, ts));
          continue;
        }
        ++consistent;
        CHECK(bio_spans(tags, ts) == scan_spans(tags, ts));
        CHECK(tags_from_spans(bio_spans(tags, ts), 3, ts) == tags);
      }
    }
  }
  CHECK(consistent > 0);
}

TEST_CASE("tags_from_spans inverts bio_spans on random span lists") {
  TagSet ts;
  SplitMix64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(12));
    std::vector<Span> spans;
    int pos = 0;
    while (pos < n) {
      pos += static_cast<int>(rng.below(3));
      if (pos >= n) break;
      const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(3, n - pos))));
      spans.push_back({pos, pos + len, static_cast<int>(rng.below(4))});
      pos += len;
    }
    CHECK(bio_spans(tags_from_spans(spans, static_cast<std::size_t>(n), ts), ts) == spans);
  }
}

TEST_CASE("make_splits sizes, disjointness and prefix contract") {
  const Corpus c = numbered_corpus(12000);
  const auto big = make_splits(c, {10000, 1000, 1000, 7});
  CHECK(big.train.size() == 10000);
  CHECK(big.dev.size() == 1000);
  CHECK(big.test.size() == 1000);
  std::set<std::string> all;
  for (const auto* part : {&big.train, &big.dev, &big.test}) {
    for (const auto& id : ids(*part)) CHECK(all.insert(id).second);
  }
  const auto small = make_splits(c, {100, 1000, 1000, 7});
  REQUIRE(small.train.size() == 100);
  CHECK(std::equal(small.train.begin(), small.train.end(), big.train.begin()));
  CHECK(small.dev == big.dev);
  CHECK(small.test == big.test);
}

TEST_CASE("make_splits determinism and seed sensitivity") {
  const Corpus c = numbered_corpus(3000);
  const SplitSpec spec{100, 1000, 1000, 7};
  CHECK(make_splits(c, spec).train == make_splits(c, spec).train);
  std::set<std::set<std::string>> memberships;
  for (std::uint64_t seed = 0; seed < 20; ++seed) memberships.insert(ids(make_splits(c, {100, 1000, 1000, seed}).train));
  CHECK(memberships.size() == 20);
}

TEST_CASE("make_splits reports required and available counts") {
  try {
    make_splits(numbered_corpus(50), {100, 10, 10, 1});
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("120") != std::string::npos);
    CHECK(msg.find("50") != std::string::npos);
  }
  CHECK_THROWS_AS(make_splits(numbered_corpus(50), {0, 10, 10, 1}), Error);
}

TEST_CASE("language registry") {
  const auto r = LanguageRegistry::builtin();
  CHECK(r.entries().size() == 17);
  CHECK(r.resolve("cl") == "ca");
  CHECK(r.info("ceb").family == "Austronesian");
  CHECK(r.info("hi").branch == "Indo-Aryan");
  CHECK_THROWS_AS(r.resolve("xx"), Error);
  std::set<std::string> codes;
  for (const auto& e : r.entries()) CHECK(codes.insert(e.code).second);
}

TEST_CASE("manifest parsing") {
  const auto m = parse_manifest("# corpora\na.conll\tgl\ttarget\n/abs/b.conll\tes\tsource\n\n", "/data");
  REQUIRE(m.size() == 2);
  CHECK(m[0].path == std::filesystem::path("/data/a.conll"));
  CHECK(m[0].role == CorpusRole::kTarget);
  CHECK(m[1].path == std::filesystem::path("/abs/b.conll"));
  CHECK(m[1].role == CorpusRole::kSource);
  CHECK_THROWS_AS(parse_manifest("a.conll\tgl\n", "/"), Error);
  CHECK_THROWS_AS(parse_manifest("a.conll\tgl\tboth\n", "/"), Error);
}

TEST_CASE("synthetic corpora are deterministic and BIO-consistent") {
  TagSet ts;
  const auto a = generate_synthetic(synthetic_language(0), 200, 5, ts);
  CHECK(a == generate_synthetic(synthetic_language(0), 200, 5, ts));
  std::set<std::string> words_a, words_b;
  for (const auto& ls : a) {
    CHECK(is_bio_consistent(ls.tags, ts));
    for (const auto& w : ls.sentence.tokens) words_a.insert(w);
  }
  for (const auto& ls : generate_synthetic(synthetic_language(1), 200, 5, ts)) {
    for (const auto& w : ls.sentence.tokens) words_b.insert(w);
  }
  for (const auto& w : words_b) CHECK(words_a.count(w) == 0);
}
