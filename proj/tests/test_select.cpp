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

#include "shade/select.hpp"
#include "test_util.hpp"

using namespace shade;
using shade_test::toks;

namespace {

AttackCandidate cand(double drop, double sim, int method = 0, int node = 0, int depth = 0) {
  AttackCandidate c;
  c.original_id = "x";
  c.method_id = method;
  c.model_node_id = node;
  c.model_depth = depth;
  c.adv_text = "adv";
  c.prob_drop = drop;
  c.similarity = sim;
  return c;
}

}  // namespace

TEST_CASE("score is the weighted sum of drop and similarity") {
  SelectConfig cfg;  // alpha 3, beta 1
  REQUIRE(score(cand(0.5, 0.9), cfg) == Catch::Approx(2.4));

  SelectConfig sim_only;
  sim_only.alpha = 0.0;
  sim_only.beta = 1.0;
  REQUIRE(score(cand(0.7, 0.93), sim_only) == Catch::Approx(0.93));

  SelectConfig cfg2;
  REQUIRE(score(cand(0.0, 1.0), cfg2) == Catch::Approx(cfg2.beta));
}

TEST_CASE("selection replays the six-candidate elimination scenario") {
  // Two candidates fail the probability-drop constraint, two fail the
  // similarity constraint, and of the two survivors the higher score wins.
  std::vector<AttackCandidate> candidates{
      cand(0.10, 0.95, 0, 0, 0),  // below eps_prime
      cand(0.20, 0.99, 1, 0, 0),  // below eps_prime
      cand(0.60, 0.50, 0, 1, 1),  // below eps_star
      cand(0.70, 0.80, 1, 1, 1),  // below eps_star
      cand(0.80, 0.90, 0, 2, 1),  // survivor, score 3.3
      cand(0.50, 0.95, 1, 2, 1),  // survivor, score 2.45
  };
  SelectConfig cfg;
  auto result = select_final(candidates, cfg);
  REQUIRE(result.outcome == SelectionOutcome::selected);
  REQUIRE(result.score == Catch::Approx(3.3));
  REQUIRE(result.chosen->model_node_id == 2);
  REQUIRE(result.chosen->method_id == 0);

  REQUIRE(result.rejected.size() == 4);
  CHECK(result.rejected[0].reason == "below_eps_prime");
  CHECK(result.rejected[1].reason == "below_eps_prime");
  CHECK(result.rejected[2].reason == "below_eps_star");
  CHECK(result.rejected[3].reason == "below_eps_star");
}

TEST_CASE("a candidate failing both constraints reports below_eps_prime") {
  auto result = select_final({cand(0.1, 0.2)}, SelectConfig{});
  REQUIRE(result.outcome == SelectionOutcome::no_valid_candidate);
  REQUIRE(result.rejected.size() == 1);
  CHECK(result.rejected[0].reason == "below_eps_prime");
}

TEST_CASE("empty candidate lists select nothing") {
  auto result = select_final({}, SelectConfig{});
  REQUIRE(result.outcome == SelectionOutcome::no_valid_candidate);
  REQUIRE(result.rejected.empty());
  REQUIRE_FALSE(result.chosen.has_value());
}

TEST_CASE("score ties break by similarity, then depth, then method") {
  // Equal scores, equal similarity: lower depth wins.
  {
    auto a = cand(0.5, 0.9, 1, 5, 2);
    auto b = cand(0.5, 0.9, 1, 1, 1);
    auto result = select_final({a, b}, SelectConfig{});
    REQUIRE(result.chosen->model_node_id == 1);
  }
  // Equal scores, higher similarity wins (alpha*drop compensating).
  {
    SelectConfig cfg;  // 3*drop + sim
    auto a = cand(0.50, 0.90);      // 2.4
    auto b = cand(0.4966666666666667, 0.91);  // 2.4 as well
    auto ra = select_final({a, b}, cfg);
    REQUIRE(ra.chosen->similarity == Catch::Approx(0.91));
  }
  // Equal everything but method id: lower method wins.
  {
    auto a = cand(0.5, 0.9, 3, 2, 1);
    auto b = cand(0.5, 0.9, 1, 2, 1);
    auto result = select_final({a, b}, SelectConfig{});
    REQUIRE(result.chosen->method_id == 1);
  }
}

TEST_CASE("scaling alpha and beta together does not change the winner") {
  Rng rng(2718);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<AttackCandidate> candidates;
    std::size_t n = 1 + rng_below(rng, 8);
    for (std::size_t i = 0; i < n; ++i)
      candidates.push_back(cand(rng_u01(rng), 2.0 * rng_u01(rng) - 1.0,
                                static_cast<int>(i % 5), static_cast<int>(i),
                                static_cast<int>(i % 3)));
    SelectConfig base;
    auto r1 = select_final(candidates, base);
    SelectConfig scaled;
    scaled.alpha = base.alpha * 7.5;
    scaled.beta = base.beta * 7.5;
    auto r2 = select_final(candidates, scaled);
    REQUIRE((r1.outcome == SelectionOutcome::selected) ==
            (r2.outcome == SelectionOutcome::selected));
    if (r1.outcome == SelectionOutcome::selected) {
      REQUIRE(r1.chosen->model_node_id == r2.chosen->model_node_id);
      REQUIRE(r1.chosen->method_id == r2.chosen->method_id);
    }
  }
}

TEST_CASE("enlarging the candidate pool never lowers the chosen score") {
  Rng rng(31415);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<AttackCandidate> candidates;
    for (int i = 0; i < 10; ++i)
      candidates.push_back(cand(rng_u01(rng), rng_u01(rng), i % 5, i, i % 3));
    SelectConfig cfg;
    cfg.eps_prime = 0.2;
    cfg.eps_star = 0.3;
    std::optional<double> prev;
    for (std::size_t take = 2; take <= candidates.size(); take += 2) {
      std::vector<AttackCandidate> subset(candidates.begin(),
                                          candidates.begin() + static_cast<long>(take));
      auto r = select_final(subset, cfg);
      if (r.score) {
        if (prev) REQUIRE(*r.score >= *prev - 1e-12);
        prev = r.score;
      }
    }
  }
}

TEST_CASE("config validation rejects bad weights and thresholds") {
  SelectConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  REQUIRE_THROWS(select_final({}, cfg));
  SelectConfig cfg2;
  cfg2.eps_prime = 1.5;
  REQUIRE_THROWS(select_final({}, cfg2));
  SelectConfig cfg3;
  cfg3.eps_star = -2.0;
  REQUIRE_THROWS(select_final({}, cfg3));
}

namespace {

// Shared fixture for pipeline tests: a small corpus, a strong lexicon, and
// a depth-1 tree trained on the corpus itself.
struct PipelineFixture {
  std::vector<TextRecord> records;
  Lexicon lexicon;
  std::unique_ptr<OneHotEmbedder> embedder;
  ModelTree tree;
  CooccurrenceTable cooc;

  PipelineFixture() {
    std::vector<std::string> pos{"good", "great", "nice", "fine", "lovely"};
    std::vector<std::string> neg{"bad", "awful", "poor", "grim", "bleak"};
    std::vector<std::string> filler{"movie", "story", "scene", "film", "crowd", "mood",
                                    "day",   "night", "week",  "tone", "plot",  "cast"};
    Rng rng(1001);
    for (int i = 0; i < 40; ++i) {
      bool positive = i % 2 == 0;
      const auto& bank = positive ? pos : neg;
      std::vector<std::string> tokens;
      for (int k = 0; k < 3; ++k) tokens.push_back(bank[rng_below(rng, bank.size())]);
      while (tokens.size() < 10)
        tokens.push_back(filler[rng_below(rng, filler.size())]);
      rng_shuffle(tokens, rng);
      std::string text;
      for (std::size_t j = 0; j < tokens.size(); ++j) {
        if (j) text += ' ';
        text += tokens[j];
      }
      records.push_back(TextRecord{"r" + std::to_string(i), text, std::nullopt});
    }
    for (const auto& p : pos) lexicon.add(p, neg);
    for (const auto& n : neg) lexicon.add(n, pos);

    std::vector<TokenizedText> tokenized;
    for (const auto& r : records) tokenized.push_back(tokenize(r));
    embedder = std::make_unique<OneHotEmbedder>(fit_vocabulary(tokenized, 1));
    cooc.fit(tokenized);

    TreeBuildConfig cfg;
    cfg.u = 1;
    cfg.min_node_size = 4;
    cfg.seed = 7;
    cfg.train.epochs = 30;
    cfg.train.hidden_width = 16;
    tree = build_tree(tokenized, *embedder, cfg);
  }
};

}  // namespace

TEST_CASE("run_pipeline selects per record and replays deterministically") {
  PipelineFixture fx;
  std::vector<AttackMethod> methods{AttackMethod::grad_flip, AttackMethod::charbug};
  AttackBudget budget;
  budget.seed = 55;
  SelectConfig cfg;

  auto r1 = run_pipeline(fx.records, fx.tree, methods, budget, cfg, *fx.embedder,
                         fx.lexicon, &fx.cooc);
  auto r2 = run_pipeline(fx.records, fx.tree, methods, budget, cfg, *fx.embedder,
                         fx.lexicon, &fx.cooc);
  REQUIRE(r1.size() == fx.records.size());
  int selected = 0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    REQUIRE(r1[i].original_id == fx.records[i].id);
    REQUIRE((r1[i].outcome == SelectionOutcome::selected) ==
            (r2[i].outcome == SelectionOutcome::selected));
    if (r1[i].outcome == SelectionOutcome::selected) {
      ++selected;
      REQUIRE(r1[i].chosen->adv_text == r2[i].chosen->adv_text);
      REQUIRE(*r1[i].score == *r2[i].score);
      // Constraints hold exactly for everything selected.
      REQUIRE(r1[i].chosen->prob_drop >= cfg.eps_prime);
      REQUIRE(r1[i].chosen->similarity >= cfg.eps_star);
    }
  }
  REQUIRE(selected > 0);
}

TEST_CASE("char-level attacks on single-character tokens select nothing") {
  std::vector<TextRecord> records{{"a", "a b c d", std::nullopt}, {"b", "b c d e", std::nullopt}};
  std::vector<TokenizedText> tokenized;
  for (const auto& r : records) tokenized.push_back(tokenize(r));
  OneHotEmbedder embedder(fit_vocabulary(tokenized, 1));
  TreeBuildConfig cfg;
  cfg.u = 0;
  cfg.min_node_size = 2;
  cfg.seed = 3;
  cfg.train.epochs = 5;
  cfg.train.hidden_width = 4;
  auto tree = build_tree(tokenized, embedder, cfg);

  Lexicon lexicon;
  CooccurrenceTable cooc;
  cooc.fit(tokenized);
  auto results = run_pipeline(records, tree, {AttackMethod::charbug}, AttackBudget{},
                              SelectConfig{}, embedder, lexicon, &cooc);
  for (const auto& r : results) REQUIRE(r.outcome == SelectionOutcome::no_valid_candidate);
}

TEST_CASE("identical models at different depths fall to the shallowest") {
  PipelineFixture fx;
  // Three pool entries sharing one parameter set: candidates tie on score
  // and similarity, so the depth rule must pick node 0.
  const ClassifierParams* params = &fx.tree.nodes[0].params;
  std::vector<ModelPoolEntry> pool{{0, 0, params}, {1, 1, params}, {2, 1, params}};
  SelectConfig cfg;
  cfg.eps_prime = 0.0;
  cfg.eps_star = -1.0;
  int checked = 0;
  for (const auto& rec : fx.records) {
    auto input = make_attack_input(rec);
    auto cands = generate_candidates(input, pool, {AttackMethod::grad_flip}, *fx.embedder,
                                     fx.lexicon, &fx.cooc, AttackBudget{});
    if (cands.empty()) continue;
    auto result = select_final(cands, cfg);
    REQUIRE(result.outcome == SelectionOutcome::selected);
    REQUIRE(result.chosen->model_node_id == 0);
    ++checked;
  }
  REQUIRE(checked > 0);
}
