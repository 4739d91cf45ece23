// Copyright 2026 The shade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "shade/corpus.hpp"
#include "test_util.hpp"

using namespace shade;
using shade_test::TempFile;

TEST_CASE("load_corpus parses well-formed records in order") {
  TempFile f("{\"id\":\"a\",\"text\":\"i feel happy\"}\n{\"id\":\"b\",\"text\":\"awful film\"}\n");
  auto records = load_corpus(f.path());
  REQUIRE(records.size() == 2);
  CHECK(records[0].id == "a");
  CHECK(records[0].text == "i feel happy");
  CHECK_FALSE(records[0].label.has_value());
  CHECK(records[1].id == "b");
}

TEST_CASE("load_corpus reports empty text with its line number") {
  TempFile f("{\"id\":\"a\",\"text\":\"\"}\n");
  REQUIRE_THROWS_WITH(load_corpus(f.path()), "empty text at line 1");
  TempFile g("{\"id\":\"a\",\"text\":\"ok\"}\n{\"id\":\"b\",\"text\":\"  \\t \"}\n");
  REQUIRE_THROWS_WITH(load_corpus(g.path()), "empty text at line 2");
}

TEST_CASE("load_corpus honors require_labels") {
  TempFile f("{\"id\":\"a\",\"text\":\"fine\",\"label\":2}\n");
  auto records = load_corpus(f.path(), true);
  REQUIRE(records.size() == 1);
  CHECK(records[0].label == 2);

  TempFile g("{\"id\":\"a\",\"text\":\"fine\"}\n");
  REQUIRE_THROWS_WITH(load_corpus(g.path(), true), "missing label at line 1");
}

TEST_CASE("load_corpus rejects malformed lines and duplicate ids") {
  TempFile f("{\"id\":\"a\",\"text\":\"x\"}\nnot json\n");
  REQUIRE_THROWS_WITH(load_corpus(f.path()), "malformed record at line 2");

  TempFile g("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
  REQUIRE_THROWS_WITH(load_corpus(g.path()), "duplicate id \"a\" at line 2");

  TempFile h("{\"id\":1,\"text\":\"x\"}\n");
  REQUIRE_THROWS_WITH(load_corpus(h.path()), "malformed record at line 1");
}

TEST_CASE("normalized corpus serialization is a fixed point") {
  TempFile f("{\"text\":\"Weird  Order\",\"id\":\"a\",\"label\":1}\n"
             "{\"id\":\"b\",\"text\":\"plain\"}\n");
  auto first = serialize_corpus(load_corpus(f.path()));
  TempFile g(first);
  auto second = serialize_corpus(load_corpus(g.path()));
  REQUIRE(first == second);
}

TEST_CASE("tokenize lowercases maximal alphanumeric runs with byte spans") {
  auto t = tokenize("r", "Good, movie!");
  REQUIRE(t.tokens == std::vector<std::string>{"good", "movie"});
  REQUIRE(t.spans == std::vector<std::pair<std::size_t, std::size_t>>{{0, 4}, {6, 11}});

  auto u = tokenize("r", "A  B");
  REQUIRE(u.tokens == std::vector<std::string>{"a", "b"});

  REQUIRE_THROWS_WITH(tokenize("r", "!!!"), "no tokens");
}

TEST_CASE("tokenize reconstruction invariant") {
  const std::string text = "One, two...  three! caf\xc3\xa9 4x4";
  auto t = tokenize("r", text);
  // Splicing every token back into its span reproduces the input exactly.
  std::string rebuilt = text;
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    auto [b, e] = t.spans[i];
    REQUIRE(b < e);
    if (i > 0) REQUIRE(t.spans[i - 1].second <= b);
    rebuilt.replace(b, e - b, text.substr(b, e - b));
  }
  REQUIRE(rebuilt == text);
  REQUIRE(t.tokens == std::vector<std::string>{"one", "two", "three", "caf\xc3\xa9", "4x4"});
}

TEST_CASE("tokenize treats unicode punctuation as separators") {
  // em dash U+2014 splits; accented letters do not.
  auto t = tokenize("r", "caf\xc3\xa9\xe2\x80\x94" "bar");
  REQUIRE(t.tokens == std::vector<std::string>{"caf\xc3\xa9", "bar"});
}

TEST_CASE("tokenize is idempotent on lowercase alphanumeric text") {
  auto t = tokenize("r", "plain lowercase words 123");
  std::string joined;
  for (const auto& tok : t.tokens) {
    if (!joined.empty()) joined += ' ';
    joined += tok;
  }
  auto u = tokenize("r", joined);
  REQUIRE(u.tokens == t.tokens);
}

static std::vector<TextRecord> make_records(std::size_t n) {
  std::vector<TextRecord> recs;
  for (std::size_t i = 0; i < n; ++i)
    recs.push_back({"r" + std::to_string(i), "text " + std::to_string(i), std::nullopt});
  return recs;
}

TEST_CASE("split_victim_and_holdout is a deterministic partition") {
  auto recs = make_records(10);
  auto [v1, h1] = split_victim_and_holdout(recs, 0.5, 7);
  auto [v2, h2] = split_victim_and_holdout(recs, 0.5, 7);
  REQUIRE(v1.size() == 5);
  REQUIRE(h1.size() == 5);
  REQUIRE(v1.size() + h1.size() == recs.size());
  for (std::size_t i = 0; i < v1.size(); ++i) CHECK(v1[i].id == v2[i].id);
  for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1[i].id == h2[i].id);

  std::set<std::string> ids;
  for (const auto& r : v1) ids.insert(r.id);
  for (const auto& r : h1) ids.insert(r.id);
  REQUIRE(ids.size() == recs.size());
}

TEST_CASE("split rounding yields sizes within one of fraction*n") {
  auto recs = make_records(3);
  auto [v, h] = split_victim_and_holdout(recs, 0.34, 1);
  REQUIRE(v.size() == 1);
  REQUIRE(h.size() == 2);
}

TEST_CASE("split rejects out-of-range fractions") {
  auto recs = make_records(4);
  REQUIRE_THROWS_WITH(split_victim_and_holdout(recs, 1.0, 1), "fraction outside (0,1)");
  REQUIRE_THROWS_WITH(split_victim_and_holdout(recs, 0.0, 1), "fraction outside (0,1)");
}

TEST_CASE("split is a partition for any seed") {
  auto recs = make_records(9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto [v, h] = split_victim_and_holdout(recs, 0.4, seed);
    std::set<std::string> ids;
    for (const auto& r : v) ids.insert(r.id);
    for (const auto& r : h) ids.insert(r.id);
    REQUIRE(v.size() + h.size() == recs.size());
    REQUIRE(ids.size() == recs.size());
  }
}

TEST_CASE("lexicon file parsing and validation") {
  TempFile f("good\tbad,awful\nmovie\tfilm\n");
  auto lex = load_lexicon(f.path());
  REQUIRE(lex.synonyms_for("good") == std::vector<std::string>{"bad", "awful"});
  REQUIRE(lex.synonyms_for("movie") == std::vector<std::string>{"film"});
  REQUIRE(lex.synonyms_for("unknown").empty());

  TempFile self_map("good\tgood\n");
  REQUIRE_THROWS(load_lexicon(self_map.path()));
  TempFile upper("good\tBad\n");
  REQUIRE_THROWS(load_lexicon(upper.path()));
  TempFile no_tab("good bad\n");
  REQUIRE_THROWS(load_lexicon(no_tab.path()));
}
