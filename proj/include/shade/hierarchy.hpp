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
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shade/cluster.hpp"
#include "shade/common.hpp"
#include "shade/substitute.hpp"

namespace shade {

/// One trained node of the substitute-model tree. Node ids are heap order:
/// children of node i are 2i+1 (branch 0) and 2i+2 (branch 1), so level
/// order is id order.
struct ModelNode {
  int node_id = 0;
  int depth = 0;
  std::optional<int> parent;
  int branch = 0;  // which parent pseudo-label this node refines
  std::vector<std::string> member_ids;
  ClusterModel cluster_model;
  std::vector<int> member_labels;  // this node's own pseudo-labels, by member
  ClassifierParams params;
  std::vector<double> loss_trace;
};

struct PrunedNode {
  int node_id = 0;
  int depth = 0;
  std::optional<int> parent;
  int branch = 0;
  std::size_t member_count = 0;
  std::string reason;
};

struct ModelTree {
  int u = 0;                      // configured iteration depth
  std::vector<ModelNode> nodes;   // level order
  std::vector<PrunedNode> pruned;

  std::size_t total_models() const { return nodes.size(); }
  const ModelNode* find(int node_id) const {
    for (const auto& n : nodes)
      if (n.node_id == node_id) return &n;
    return nullptr;
  }
};

struct TreeBuildConfig {
  int u = 2;
  std::size_t min_node_size = 8;
  int cluster_k = 2;      // >2 is only meaningful with u = 0 (k-way root)
  int restarts = 10;
  TrainConfig train;
  std::uint64_t seed = 1;
};

/// Number of substitute models a full depth-u tree holds:
/// sum of 2^i for i in [0, u], i.e. 2^(u+1) - 1.
inline long long count_models(int u) {
  if (u < 0) throw std::invalid_argument("count_models: u must be >= 0");
  if (u > 61) throw std::invalid_argument("count_models: u too large");
  return (1LL << (u + 1)) - 1;
}

/// Breadth-first construction: the root clusters and trains on all records;
/// each child re-clusters the subset of its parent's members that carry one
/// parent pseudo-label. Unviable nodes are pruned with a recorded reason and
/// get no descendants.
inline ModelTree build_tree(const std::vector<TokenizedText>& records,
                            const Embedder& embedder, const TreeBuildConfig& config) {
  if (config.u < 0) throw std::invalid_argument("build_tree: u must be >= 0");
  if (records.size() < 2)
    throw std::invalid_argument("build_tree: at least 2 records required");
  if (config.cluster_k < 2) throw std::invalid_argument("build_tree: cluster_k must be >= 2");
  if (config.cluster_k > 2 && config.u > 0)
    throw std::invalid_argument("build_tree: tree_depth must be 0 when cluster_k > 2");

  std::vector<EmbeddingVector> embeddings;
  embeddings.reserve(records.size());
  for (const auto& r : records) embeddings.push_back(embedder.embed(r));

  ModelTree tree;
  tree.u = config.u;

  struct Pending {
    int node_id;
    int depth;
    std::optional<int> parent;
    int branch;
    std::vector<std::size_t> members;  // indices into records
  };
  std::deque<Pending> queue;
  std::vector<std::size_t> all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  queue.push_back(Pending{0, 0, std::nullopt, 0, std::move(all)});

  while (!queue.empty()) {
    Pending node = std::move(queue.front());
    queue.pop_front();
    const bool is_root = node.node_id == 0;

    auto prune = [&](const std::string& reason) {
      if (is_root) throw std::runtime_error("build_tree: root unviable: " + reason);
      tree.pruned.push_back(PrunedNode{node.node_id, node.depth, node.parent, node.branch,
                                       node.members.size(), reason});
    };

    if (node.members.size() < std::max<std::size_t>(config.min_node_size, 2)) {
      prune("fewer than min_node_size members");
      continue;
    }
    std::vector<EmbeddingVector> subset;
    subset.reserve(node.members.size());
    for (auto i : node.members) subset.push_back(embeddings[i]);
    if (detail::count_distinct(subset) < static_cast<std::size_t>(config.cluster_k)) {
      prune("fewer than k distinct embeddings");
      continue;
    }

    std::uint64_t node_seed = derive_seed(config.seed, static_cast<std::uint64_t>(node.node_id));
    ClusterModel cluster = kmeans_fit_best(subset, config.cluster_k, node_seed, config.restarts);

    std::vector<int> raw(subset.size());
    std::vector<std::size_t> sizes(config.cluster_k, 0);
    for (std::size_t i = 0; i < subset.size(); ++i) {
      raw[i] = assign(cluster, subset[i]);
      sizes[raw[i]]++;
    }
    // Canonical labels: largest cluster first, ties by centroid order.
    std::vector<int> order(config.cluster_k);
    for (int c = 0; c < config.cluster_k; ++c) order[c] = c;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
      return cluster.centroids[a].values < cluster.centroids[b].values;
    });
    std::vector<int> remap(config.cluster_k);
    for (int pos = 0; pos < config.cluster_k; ++pos) remap[order[pos]] = pos;
    std::vector<EmbeddingVector> centroids(config.cluster_k);
    for (int c = 0; c < config.cluster_k; ++c) centroids[remap[c]] = cluster.centroids[c];
    cluster.centroids = std::move(centroids);

    std::vector<int> labels(subset.size());
    int distinct_labels = 0;
    {
      std::vector<bool> seen(config.cluster_k, false);
      for (std::size_t i = 0; i < subset.size(); ++i) {
        labels[i] = remap[raw[i]];
        if (!seen[labels[i]]) {
          seen[labels[i]] = true;
          ++distinct_labels;
        }
      }
    }
    if (distinct_labels < 2) {
      prune("single pseudo-label after clustering");
      continue;
    }

    std::vector<std::pair<EmbeddingVector, int>> training;
    training.reserve(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) training.emplace_back(subset[i], labels[i]);
    TrainConfig tc = config.train;
    tc.seed = derive_seed(config.seed, static_cast<std::uint64_t>(node.node_id), 0x7ea1ULL);
    TrainResult trained = train_kway(training, static_cast<std::size_t>(config.cluster_k), tc);

    ModelNode out;
    out.node_id = node.node_id;
    out.depth = node.depth;
    out.parent = node.parent;
    out.branch = node.branch;
    out.member_ids.reserve(node.members.size());
    for (auto i : node.members) out.member_ids.push_back(records[i].record_id);
    out.cluster_model = std::move(cluster);
    out.member_labels = labels;
    out.params = std::move(trained.params);
    out.loss_trace = std::move(trained.loss_trace);

    if (node.depth < config.u) {
      for (int branch = 0; branch < 2; ++branch) {
        std::vector<std::size_t> child_members;
        for (std::size_t i = 0; i < node.members.size(); ++i)
          if (labels[i] == branch) child_members.push_back(node.members[i]);
        queue.push_back(Pending{2 * node.node_id + 1 + branch, node.depth + 1, node.node_id,
                                branch, std::move(child_members)});
      }
    }
    tree.nodes.push_back(std::move(out));
  }

  std::sort(tree.nodes.begin(), tree.nodes.end(),
            [](const ModelNode& a, const ModelNode& b) { return a.node_id < b.node_id; });
  std::sort(tree.pruned.begin(), tree.pruned.end(),
            [](const PrunedNode& a, const PrunedNode& b) { return a.node_id < b.node_id; });
  return tree;
}

enum class ModelOrder { level_order, leaf_first };

/// The candidate model pool, deterministically ordered.
inline std::vector<std::pair<int, const ClassifierParams*>> models_for(
    const ModelTree& tree, ModelOrder order = ModelOrder::level_order) {
  std::vector<const ModelNode*> nodes;
  nodes.reserve(tree.nodes.size());
  for (const auto& n : tree.nodes) nodes.push_back(&n);
  if (order == ModelOrder::leaf_first) {
    std::sort(nodes.begin(), nodes.end(), [](const ModelNode* a, const ModelNode* b) {
      if (a->depth != b->depth) return a->depth > b->depth;
      return a->node_id < b->node_id;
    });
  }
  std::vector<std::pair<int, const ClassifierParams*>> out;
  out.reserve(nodes.size());
  for (const auto* n : nodes) out.emplace_back(n->node_id, &n->params);
  return out;
}

// --- tree manifest + per-node model files ---

inline void save_tree(const ModelTree& tree, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "shade-model-tree";
  manifest["version"] = 1;
  manifest["u"] = tree.u;
  manifest["total_models"] = tree.total_models();
  manifest["nodes"] = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    char name[32];
    std::snprintf(name, sizeof(name), "node_%03d.json", n.node_id);
    std::string file = name;
    save_params(n.params, (std::filesystem::path(dir) / file).string());
    nlohmann::json jn;
    jn["node_id"] = n.node_id;
    jn["depth"] = n.depth;
    if (n.parent) jn["parent"] = *n.parent;
    jn["branch"] = n.branch;
    jn["member_count"] = n.member_ids.size();
    jn["member_ids"] = n.member_ids;
    jn["model_file"] = file;
    manifest["nodes"].push_back(jn);
  }
  manifest["pruned"] = nlohmann::json::array();
  for (const auto& p : tree.pruned) {
    nlohmann::json jp;
    jp["node_id"] = p.node_id;
    jp["depth"] = p.depth;
    if (p.parent) jp["parent"] = *p.parent;
    jp["branch"] = p.branch;
    jp["member_count"] = p.member_count;
    jp["reason"] = p.reason;
    manifest["pruned"].push_back(jp);
  }
  std::ofstream out(std::filesystem::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write tree manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

/// Loads what the attack stage needs: node ids, depths, and parameters.
/// Clustering metadata is not persisted; it only matters during the build.
inline ModelTree load_tree(const std::string& dir) {
  std::ifstream in(std::filesystem::path(dir) / "manifest.json", std::ios::binary);
  if (!in) throw std::runtime_error("missing tree manifest");
  nlohmann::json manifest;
  in >> manifest;
  if (manifest.value("format", "") != "shade-model-tree")
    throw std::runtime_error("not a tree manifest");
  ModelTree tree;
  tree.u = manifest.at("u").get<int>();
  for (const auto& jn : manifest.at("nodes")) {
    ModelNode n;
    n.node_id = jn.at("node_id").get<int>();
    n.depth = jn.at("depth").get<int>();
    if (jn.contains("parent")) n.parent = jn.at("parent").get<int>();
    n.branch = jn.at("branch").get<int>();
    n.member_ids = jn.at("member_ids").get<std::vector<std::string>>();
    n.params = load_params(
        (std::filesystem::path(dir) / jn.at("model_file").get<std::string>()).string());
    tree.nodes.push_back(std::move(n));
  }
  for (const auto& jp : manifest.value("pruned", nlohmann::json::array())) {
    PrunedNode p;
    p.node_id = jp.at("node_id").get<int>();
    p.depth = jp.at("depth").get<int>();
    if (jp.contains("parent")) p.parent = jp.at("parent").get<int>();
    p.branch = jp.at("branch").get<int>();
    p.member_count = jp.at("member_count").get<std::size_t>();
    p.reason = jp.at("reason").get<std::string>();
    tree.pruned.push_back(std::move(p));
  }
  return tree;
}

}  // namespace shade
