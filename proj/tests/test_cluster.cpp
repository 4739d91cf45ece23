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

#include <set>

#include "shade/cluster.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace shade;
using shade_test::toks;

static std::vector<EmbeddingVector> vectors1d(const std::vector<double>& xs) {
  std::vector<EmbeddingVector> out;
  for (double x : xs) out.push_back(EmbeddingVector{{x}, "test"});
  return out;
}

TEST_CASE("kmeans_fit recovers the obvious 1-D partition") {
  auto vecs = vectors1d({0.0, 0.1, 5.0, 5.1});
  auto model = kmeans_fit_best(vecs, 2, 17);
  REQUIRE(model.inertia == Catch::Approx(0.01).margin(1e-12));

  int label0 = assign(model, vecs[0]);
  CHECK(assign(model, vecs[1]) == label0);
  int label2 = assign(model, vecs[2]);
  CHECK(assign(model, vecs[3]) == label2);
  CHECK(label0 != label2);

  std::vector<std::vector<double>> pts{{0.0}, {0.1}, {5.0}, {5.1}};
  REQUIRE(model.inertia == Catch::Approx(shade_test::brute_force_best_sse_k2(pts)).margin(1e-12));
}

TEST_CASE("kmeans_fit rejects inputs with fewer distinct vectors than k") {
  auto vecs = vectors1d({1.0, 1.0, 1.0});
  REQUIRE_THROWS_WITH(kmeans_fit(vecs, 2, 1), "fewer than k distinct vectors");
}

TEST_CASE("kmeans_fit on two distinct points is exact") {
  auto vecs = vectors1d({-3.0, 4.0});
  auto model = kmeans_fit(vecs, 2, 5);
  REQUIRE(model.inertia == Catch::Approx(0.0).margin(1e-15));
  std::set<double> centers{model.centroids[0].values[0], model.centroids[1].values[0]};
  REQUIRE(centers == std::set<double>{-3.0, 4.0});
}

TEST_CASE("assign picks the nearest centroid with low-index ties") {
  ClusterModel model;
  model.k = 2;
  model.centroids = {EmbeddingVector{{0.05}, "test"}, EmbeddingVector{{5.05}, "test"}};

  CHECK(assign(model, EmbeddingVector{{5.05}, "test"}) == 1);
  CHECK(assign(model, EmbeddingVector{{2.55}, "test"}) == 0);  // equidistant
  CHECK(assign(model, EmbeddingVector{{4.0}, "test"}) == 1);
  REQUIRE_THROWS(assign(model, EmbeddingVector{{1.0, 2.0}, "test"}));
}

TEST_CASE("inertia trace is non-increasing") {
  Rng rng(99);
  std::vector<EmbeddingVector> vecs;
  for (int i = 0; i < 40; ++i) {
    EmbeddingVector v;
    v.embedder_id = "test";
    for (int j = 0; j < 3; ++j) v.values.push_back(rng_u01(rng) + (i % 2 ? 2.0 : 0.0));
    vecs.push_back(v);
  }
  auto model = kmeans_fit(vecs, 2, 7);
  for (std::size_t i = 1; i < model.inertia_trace.size(); ++i)
    REQUIRE(model.inertia_trace[i] <= model.inertia_trace[i - 1] + 1e-12);
}

TEST_CASE("restarted k-means attains the brute-force optimum on small instances") {
  Rng rng(2024);
  int solved = 0;
  const int instances = 50;
  for (int t = 0; t < instances; ++t) {
    std::size_t n = 4 + rng_below(rng, 5);  // 4..8 points
    std::size_t dim = 1 + rng_below(rng, 3);
    std::vector<EmbeddingVector> vecs;
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p;
      for (std::size_t j = 0; j < dim; ++j) p.push_back(rng_u01(rng) * 4.0);
      pts.push_back(p);
      vecs.push_back(EmbeddingVector{p, "test"});
    }
    std::set<std::vector<double>> uniq(pts.begin(), pts.end());
    if (uniq.size() < 2) continue;
    auto model = kmeans_fit_best(vecs, 2, derive_seed(11, t), 10);
    double best = shade_test::brute_force_best_sse_k2(pts);
    if (model.inertia <= best + 1e-9) ++solved;
  }
  REQUIRE(solved >= instances - 1);
}

TEST_CASE("synthesize_shadow groups the obvious sentiment bags") {
  std::vector<TokenizedText> records{
      toks("p1", {"good", "great"}),
      toks("p2", {"fine", "nice"}),
      toks("n1", {"bad", "awful"}),
      toks("n2", {"poor", "terrible"}),
  };
  auto vocab = fit_vocabulary(records, 1);
  REQUIRE(vocab.size() == 8);
  OneHotEmbedder embedder(vocab);

  // Independent check that the two-bag split is the SSE optimum. With
  // all-distinct one-hot rows every 2-2 split has equal SSE, so nudge the
  // bags together with a shared token per polarity.
  std::vector<TokenizedText> shaped{
      toks("p1", {"good", "great", "nice"}),
      toks("p2", {"fine", "nice"}),
      toks("n1", {"bad", "awful", "poor"}),
      toks("n2", {"poor", "terrible"}),
  };
  auto shaped_vocab = fit_vocabulary(shaped, 1);
  OneHotEmbedder shaped_embedder(shaped_vocab);
  std::vector<std::vector<double>> pts;
  for (const auto& r : shaped) pts.push_back(shaped_embedder.embed(r).values);
  double best = shade_test::brute_force_best_sse_k2(pts);

  auto result = synthesize_shadow(shaped, shaped_embedder, 3);
  REQUIRE(result.model.inertia == Catch::Approx(best).margin(1e-9));
  REQUIRE(result.examples.size() == 4);
  CHECK(result.examples[0].pseudo_label == result.examples[1].pseudo_label);
  CHECK(result.examples[2].pseudo_label == result.examples[3].pseudo_label);
  CHECK(result.examples[0].pseudo_label != result.examples[2].pseudo_label);
}

TEST_CASE("synthesize_shadow degenerate and error cases") {
  std::vector<TokenizedText> two{toks("a", {"good"}), toks("b", {"bad"})};
  auto vocab = fit_vocabulary(two, 1);
  OneHotEmbedder embedder(vocab);
  auto result = synthesize_shadow(two, embedder, 1);
  REQUIRE(result.examples.size() == 2);
  CHECK(result.examples[0].pseudo_label != result.examples[1].pseudo_label);

  std::vector<TokenizedText> same{toks("a", {"good"}), toks("b", {"good"})};
  auto vocab2 = fit_vocabulary(same, 1);
  OneHotEmbedder embedder2(vocab2);
  REQUIRE_THROWS_WITH(synthesize_shadow(same, embedder2, 1), "fewer than k distinct vectors");
}

TEST_CASE("pseudo-labels depend on embeddings, not input order") {
  std::vector<TokenizedText> records{
      toks("a", {"good", "great", "nice"}), toks("b", {"great", "nice"}),
      toks("c", {"bad", "awful", "poor"}), toks("d", {"awful", "poor"}),
      toks("e", {"good", "nice"}),
  };
  auto vocab = fit_vocabulary(records, 1);
  OneHotEmbedder embedder(vocab);
  auto base = synthesize_shadow(records, embedder, 42);
  std::map<std::string, int> base_labels;
  for (const auto& ex : base.examples) base_labels[ex.record_id] = ex.pseudo_label;

  auto shuffled = records;
  std::reverse(shuffled.begin(), shuffled.end());
  auto again = synthesize_shadow(shuffled, embedder, 42);
  for (const auto& ex : again.examples) REQUIRE(base_labels.at(ex.record_id) == ex.pseudo_label);
}

TEST_CASE("canonical label 0 is the larger cluster") {
  std::vector<TokenizedText> records{
      toks("a", {"good", "fine"}), toks("b", {"good", "nice"}), toks("c", {"good", "cool"}),
      toks("d", {"bad", "awful"}),
  };
  auto vocab = fit_vocabulary(records, 1);
  OneHotEmbedder embedder(vocab);
  auto result = synthesize_shadow(records, embedder, 5);
  std::map<int, int> sizes;
  for (const auto& ex : result.examples) sizes[ex.pseudo_label]++;
  REQUIRE(sizes[0] >= sizes[1]);
}
