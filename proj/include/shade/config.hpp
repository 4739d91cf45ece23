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

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shade/attacks.hpp"
#include "shade/corpus.hpp"
#include "shade/hierarchy.hpp"
#include "shade/select.hpp"
#include "shade/substitute.hpp"

namespace shade {

/// Flat `key = value` run configuration. Every key can be overridden
/// one-for-one by a `--key value` CLI flag.
struct Config {
  // embedding
  std::string embedder = "onehot";  // onehot | tfidf | hashed | precomputed
  std::size_t dim = 256;            // hashed embedder width
  int min_count = 1;
  std::size_t max_vocab = 65536;
  // clustering and hierarchy
  int k = 2;
  int tree_depth = 2;
  std::size_t min_node_size = 8;
  int restarts = 10;
  // substitute training
  std::size_t hidden_width = 64;
  double learning_rate = 0.05;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double l2_penalty = 1e-4;
  // attack methods and budgets
  std::string methods = "grad_flip,grad_synonym,charbug,pso,masked_replace";
  int max_word_edits = 3;
  int max_char_edits = 3;
  int pso_particles = 10;
  int pso_iterations = 10;
  // selection
  double alpha = 3.0;
  double beta = 1.0;
  double eps_prime = 0.35;
  double eps_star = 0.85;
  // seeds
  std::uint64_t seed = 1;
  // paths
  std::string corpus;          // victim texts (labels, if present, are harness-only)
  std::string labeled_corpus;  // victim-model training data
  std::string lexicon;
  std::string run_dir;
  std::string vectors;  // precomputed embedding TSV (embedder = precomputed)
  // victim
  std::string victim_embedder = "tfidf";

  void set(const std::string& key, const std::string& value) {
    auto as_ull = [&] { return std::stoull(value); };
    auto as_int = [&] { return std::stoi(value); };
    auto as_double = [&] { return std::stod(value); };
    if (key == "embedder") embedder = value;
    else if (key == "dim") dim = as_ull();
    else if (key == "min_count") min_count = as_int();
    else if (key == "max_vocab") max_vocab = as_ull();
    else if (key == "k") k = as_int();
    else if (key == "tree_depth") tree_depth = as_int();
    else if (key == "min_node_size") min_node_size = as_ull();
    else if (key == "restarts") restarts = as_int();
    else if (key == "hidden_width") hidden_width = as_ull();
    else if (key == "learning_rate") learning_rate = as_double();
    else if (key == "epochs") epochs = as_ull();
    else if (key == "batch_size") batch_size = as_ull();
    else if (key == "l2_penalty") l2_penalty = as_double();
    else if (key == "methods") methods = value;
    else if (key == "max_word_edits") max_word_edits = as_int();
    else if (key == "max_char_edits") max_char_edits = as_int();
    else if (key == "pso_particles") pso_particles = as_int();
    else if (key == "pso_iterations") pso_iterations = as_int();
    else if (key == "alpha") alpha = as_double();
    else if (key == "beta") beta = as_double();
    else if (key == "eps_prime") eps_prime = as_double();
    else if (key == "eps_star") eps_star = as_double();
    else if (key == "seed") seed = as_ull();
    else if (key == "corpus") corpus = value;
    else if (key == "labeled_corpus") labeled_corpus = value;
    else if (key == "lexicon") lexicon = value;
    else if (key == "run_dir") run_dir = value;
    else if (key == "vectors") vectors = value;
    else if (key == "victim_embedder") victim_embedder = value;
    else throw std::invalid_argument("unknown config key \"" + key + "\"");
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    Config cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::string trimmed = detail::trim_ascii(line);
      if (trimmed.empty()) continue;
      auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("malformed config line at line " + std::to_string(line_no));
      std::string key = detail::trim_ascii(trimmed.substr(0, eq));
      std::string value = detail::trim_ascii(trimmed.substr(eq + 1));
      try {
        cfg.set(key, value);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string(e.what()) + " at line " + std::to_string(line_no));
      }
    }
    return cfg;
  }

  /// Names every missing required key in one message.
  void require_paths(const std::vector<std::string>& keys) const {
    std::vector<std::string> missing;
    for (const auto& key : keys) {
      const std::string* value = nullptr;
      if (key == "corpus") value = &corpus;
      else if (key == "labeled_corpus") value = &labeled_corpus;
      else if (key == "lexicon") value = &lexicon;
      else if (key == "run_dir") value = &run_dir;
      else if (key == "vectors") value = &vectors;
      else throw std::logic_error("require_paths: unknown key " + key);
      if (value->empty()) missing.push_back(key);
    }
    if (!missing.empty()) {
      std::string msg = "missing config keys:";
      for (const auto& key : missing) msg += " " + key;
      throw std::runtime_error(msg);
    }
  }

  std::vector<AttackMethod> method_list() const {
    std::vector<AttackMethod> out;
    std::stringstream ss(methods);
    std::string name;
    while (std::getline(ss, name, ',')) {
      name = detail::trim_ascii(name);
      if (!name.empty()) out.push_back(parse_method(name));
    }
    if (out.empty()) throw std::invalid_argument("config: empty method list");
    return out;
  }

  AttackBudget attack_budget() const {
    AttackBudget b;
    b.max_word_edits = max_word_edits;
    b.max_char_edits = max_char_edits;
    b.pso_particles = pso_particles;
    b.pso_iterations = pso_iterations;
    b.seed = derive_seed(seed, 0xa77acc);
    return b;
  }

  SelectConfig select_config() const {
    SelectConfig s;
    s.alpha = alpha;
    s.beta = beta;
    s.eps_prime = eps_prime;
    s.eps_star = eps_star;
    s.validate();
    return s;
  }

  TrainConfig train_config() const {
    TrainConfig t;
    t.hidden_width = hidden_width;
    t.learning_rate = learning_rate;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.l2_penalty = l2_penalty;
    t.seed = seed;  // per-node seeds derive from this in build_tree
    return t;
  }

  TreeBuildConfig tree_config() const {
    TreeBuildConfig t;
    t.u = tree_depth;
    t.min_node_size = min_node_size;
    t.cluster_k = k;
    t.restarts = restarts;
    t.train = train_config();
    t.seed = derive_seed(seed, 0x7ee);
    return t;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["embedder"] = embedder;
    j["dim"] = dim;
    j["min_count"] = min_count;
    j["max_vocab"] = max_vocab;
    j["k"] = k;
    j["tree_depth"] = tree_depth;
    j["min_node_size"] = min_node_size;
    j["restarts"] = restarts;
    j["hidden_width"] = hidden_width;
    j["learning_rate"] = learning_rate;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["l2_penalty"] = l2_penalty;
    j["methods"] = methods;
    j["max_word_edits"] = max_word_edits;
    j["max_char_edits"] = max_char_edits;
    j["pso_particles"] = pso_particles;
    j["pso_iterations"] = pso_iterations;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["eps_prime"] = eps_prime;
    j["eps_star"] = eps_star;
    j["seed"] = seed;
    j["corpus"] = corpus;
    j["labeled_corpus"] = labeled_corpus;
    j["lexicon"] = lexicon;
    j["run_dir"] = run_dir;
    j["vectors"] = vectors;
    j["victim_embedder"] = victim_embedder;
    return j;
  }
};

/// Builds the attacker's embedder from the victim texts per the config.
inline std::unique_ptr<Embedder> make_embedder(const Config& config,
                                               const std::vector<TokenizedText>& corpus) {
  if (config.embedder == "onehot")
    return std::make_unique<OneHotEmbedder>(
        fit_vocabulary(corpus, config.min_count, config.max_vocab));
  if (config.embedder == "tfidf")
    return std::make_unique<TfidfEmbedder>(
        fit_vocabulary(corpus, config.min_count, config.max_vocab));
  if (config.embedder == "hashed")
    return std::make_unique<HashedEmbedder>(config.dim, derive_seed(config.seed, 0x4a5));
  if (config.embedder == "precomputed") {
    if (config.vectors.empty())
      throw std::runtime_error("missing config keys: vectors");
    return std::make_unique<PrecomputedEmbedder>(load_precomputed_vectors(config.vectors));
  }
  throw std::invalid_argument("unknown embedder \"" + config.embedder + "\"");
}

}  // namespace shade
