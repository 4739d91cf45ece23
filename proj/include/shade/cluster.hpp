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

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "shade/common.hpp"
#include "shade/embed.hpp"

namespace shade {

struct ClusterModel {
  int k = 0;
  std::vector<EmbeddingVector> centroids;
  double inertia = 0.0;
  int iterations_run = 0;
  std::vector<double> inertia_trace;  // one entry per Lloyd iteration
};

/// Pseudo-label assignment for one record; label 0 is the canonical larger
/// cluster (the C_pos side), label 1 the smaller.
struct ShadowExample {
  std::string record_id;
  int pseudo_label = 0;
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline std::size_t nearest_centroid(const std::vector<std::vector<double>>& centroids,
                                    const std::vector<double>& point) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    double d = sq_dist(centroids[c], point);
    if (d < best_d) {  // strict: ties keep the lowest index
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline std::size_t count_distinct(const std::vector<EmbeddingVector>& vectors) {
  std::set<std::vector<double>> uniq;
  for (const auto& v : vectors) uniq.insert(v.values);
  return uniq.size();
}

}  // namespace detail

/// Index of the nearest centroid by L2 distance, lowest index on ties.
inline int assign(const ClusterModel& model, const EmbeddingVector& vector) {
  if (model.centroids.empty()) throw std::invalid_argument("assign: model not fitted");
  if (vector.dim() != model.centroids[0].dim())
    throw std::invalid_argument("assign: dimension mismatch");
  return static_cast<int>(detail::nearest_centroid(
      [&] {
        std::vector<std::vector<double>> cs;
        cs.reserve(model.centroids.size());
        for (const auto& c : model.centroids) cs.push_back(c.values);
        return cs;
      }(),
      vector.values));
}

/// Lloyd's algorithm with k-means++ seeding. Stops when the largest centroid
/// shift falls below tol or max_iter is reached. An empty cluster is repaired
/// by moving in the point currently farthest from its own centroid.
inline ClusterModel kmeans_fit(const std::vector<EmbeddingVector>& vectors, int k,
                               std::uint64_t seed, int max_iter = 300,
                               double tol = 1e-6) {
  if (k < 2) throw std::invalid_argument("kmeans_fit: k must be >= 2");
  if (vectors.empty()) throw std::invalid_argument("kmeans_fit: no vectors");
  const std::size_t n = vectors.size();
  const std::size_t dim = vectors[0].dim();
  for (const auto& v : vectors)
    if (v.dim() != dim) throw std::invalid_argument("kmeans_fit: dimension mismatch");
  if (detail::count_distinct(vectors) < static_cast<std::size_t>(k))
    throw std::invalid_argument("fewer than k distinct vectors");

  Rng rng(seed);
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);

  // k-means++ seeding over distinct points.
  centroids.push_back(vectors[rng_below(rng, n)].values);
  std::vector<double> d2(n);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, detail::sq_dist(c, vectors[i].values));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      // All remaining mass sits on already-chosen points; take the first
      // point not yet used as a centroid (distinctness guarantees one).
      for (std::size_t i = 0; i < n; ++i) {
        bool used = false;
        for (const auto& c : centroids) used = used || c == vectors[i].values;
        if (!used) {
          pick = i;
          break;
        }
      }
    } else {
      double target = rng_u01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(vectors[pick].values);
  }

  std::vector<std::size_t> labels(n, 0);
  ClusterModel model;
  model.k = k;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i)
      labels[i] = detail::nearest_centroid(centroids, vectors[i].values);

    std::vector<std::size_t> counts(k, 0);
    for (auto l : labels) counts[l]++;
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      // Donate the globally farthest point from a cluster of size >= 2.
      double worst = -1.0;
      std::size_t worst_i = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[labels[i]] < 2) continue;
        double d = detail::sq_dist(centroids[labels[i]], vectors[i].values);
        if (d > worst) {
          worst = d;
          worst_i = i;
        }
      }
      if (worst_i == n) throw std::runtime_error("kmeans_fit: cannot repair empty cluster");
      counts[labels[worst_i]]--;
      labels[worst_i] = static_cast<std::size_t>(c);
      counts[c]++;
    }

    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dim; ++j) next[labels[i]][j] += vectors[i].values[j];
    for (int c = 0; c < k; ++c)
      for (std::size_t j = 0; j < dim; ++j) next[c][j] /= static_cast<double>(counts[c]);

    double max_shift = 0.0;
    for (int c = 0; c < k; ++c)
      max_shift = std::max(max_shift, std::sqrt(detail::sq_dist(centroids[c], next[c])));
    centroids = std::move(next);

    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      sse += detail::sq_dist(centroids[labels[i]], vectors[i].values);
    model.inertia_trace.push_back(sse);

    if (max_shift < tol) {
      ++iter;
      break;
    }
  }
  model.iterations_run = iter;

  // Final assignment against the settled centroids.
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = detail::nearest_centroid(centroids, vectors[i].values);
    inertia += detail::sq_dist(centroids[labels[i]], vectors[i].values);
  }
  model.inertia = inertia;
  model.centroids.reserve(k);
  const std::string& embedder_id = vectors[0].embedder_id;
  for (auto& c : centroids) model.centroids.push_back(EmbeddingVector{std::move(c), embedder_id});
  return model;
}

/// Best of `restarts` seeded fits by inertia (restart seeds derive from the
/// base seed, so the whole procedure is one deterministic function).
inline ClusterModel kmeans_fit_best(const std::vector<EmbeddingVector>& vectors, int k,
                                    std::uint64_t seed, int restarts = 10,
                                    int max_iter = 300, double tol = 1e-6) {
  if (restarts < 1) throw std::invalid_argument("kmeans_fit_best: restarts must be >= 1");
  ClusterModel best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    ClusterModel m = kmeans_fit(vectors, k, derive_seed(seed, static_cast<std::uint64_t>(r)),
                                max_iter, tol);
    if (!have || m.inertia < best.inertia) {
      best = std::move(m);
      have = true;
    }
  }
  return best;
}

struct ShadowSynthesis {
  ClusterModel model;
  std::vector<ShadowExample> examples;
};

/// Clusters the embedded records and assigns the cluster ids as
/// pseudo-labels. Labels are canonicalized: clusters are renumbered by
/// descending size, ties by lexicographic centroid order, so label 0 is
/// always the dominant (C_pos) cluster.
inline ShadowSynthesis synthesize_shadow(const std::vector<TokenizedText>& records,
                                         const Embedder& embedder, std::uint64_t seed,
                                         int k = 2, int restarts = 10) {
  if (records.size() < 2)
    throw std::invalid_argument("synthesize_shadow: at least 2 records required");
  std::vector<EmbeddingVector> vectors;
  vectors.reserve(records.size());
  for (const auto& r : records) vectors.push_back(embedder.embed(r));

  ClusterModel model = kmeans_fit_best(vectors, k, seed, restarts);

  std::vector<int> raw(records.size());
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    raw[i] = assign(model, vectors[i]);
    sizes[raw[i]]++;
  }

  std::vector<int> order(k);
  for (int c = 0; c < k; ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
    return model.centroids[a].values < model.centroids[b].values;
  });
  std::vector<int> remap(k);
  for (int pos = 0; pos < k; ++pos) remap[order[pos]] = pos;

  std::vector<EmbeddingVector> centroids(k);
  for (int c = 0; c < k; ++c) centroids[remap[c]] = model.centroids[c];
  model.centroids = std::move(centroids);

  ShadowSynthesis out;
  out.model = std::move(model);
  out.examples.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    out.examples.push_back(ShadowExample{records[i].record_id, remap[raw[i]]});
  return out;
}

}  // namespace shade
