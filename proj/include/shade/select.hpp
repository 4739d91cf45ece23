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

#include <optional>
#include <string>
#include <vector>

#include "shade/attacks.hpp"
#include "shade/hierarchy.hpp"

namespace shade {

/// Scoring weights and hard constraints for final selection:
/// score = alpha * prob_drop + beta * similarity, subject to
/// prob_drop >= eps_prime and similarity >= eps_star.
struct SelectConfig {
  double alpha = 3.0;
  double beta = 1.0;
  double eps_prime = 0.35;
  double eps_star = 0.85;

  void validate() const {
    if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0))
      throw std::invalid_argument("select: alpha/beta must be nonnegative, not both zero");
    if (eps_prime < 0.0 || eps_prime > 1.0)
      throw std::invalid_argument("select: eps_prime must lie in [0,1]");
    if (eps_star < -1.0 || eps_star > 1.0)
      throw std::invalid_argument("select: eps_star must lie in [-1,1]");
  }
};

inline double score(const AttackCandidate& candidate, const SelectConfig& config) {
  return config.alpha * candidate.prob_drop + config.beta * candidate.similarity;
}

enum class SelectionOutcome { selected, no_valid_candidate };

struct Rejection {
  std::size_t candidate_index = 0;
  std::string reason;  // "below_eps_prime" or "below_eps_star"
};

struct SelectionResult {
  std::string original_id;
  SelectionOutcome outcome = SelectionOutcome::no_valid_candidate;
  std::optional<AttackCandidate> chosen;
  std::optional<double> score;
  std::vector<Rejection> rejected;
};

/// Applies the constraints, then picks the max-score survivor. A candidate
/// failing both constraints is recorded as below_eps_prime. Score ties break
/// to higher similarity, then lower model depth, then lower method id, then
/// lower node id.
inline SelectionResult select_final(const std::vector<AttackCandidate>& candidates,
                                    const SelectConfig& config) {
  config.validate();
  SelectionResult result;
  if (!candidates.empty()) result.original_id = candidates.front().original_id;

  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.prob_drop < config.eps_prime) {
      result.rejected.push_back(Rejection{i, "below_eps_prime"});
      continue;
    }
    if (c.similarity < config.eps_star) {
      result.rejected.push_back(Rejection{i, "below_eps_star"});
      continue;
    }
    double s = score(c, config);
    bool better = false;
    if (!best) {
      better = true;
    } else {
      const auto& b = candidates[*best];
      if (s != best_score) {
        better = s > best_score;
      } else if (c.similarity != b.similarity) {
        better = c.similarity > b.similarity;
      } else if (c.model_depth != b.model_depth) {
        better = c.model_depth < b.model_depth;
      } else if (c.method_id != b.method_id) {
        better = c.method_id < b.method_id;
      } else {
        better = c.model_node_id < b.model_node_id;
      }
    }
    if (better) {
      best = i;
      best_score = s;
    }
  }
  if (best) {
    result.outcome = SelectionOutcome::selected;
    result.chosen = candidates[*best];
    result.score = best_score;
    result.original_id = candidates[*best].original_id;
  }
  return result;
}

inline std::vector<ModelPoolEntry> pool_from_tree(const ModelTree& tree,
                                                  ModelOrder order = ModelOrder::level_order) {
  std::vector<ModelPoolEntry> pool;
  auto models = models_for(tree, order);
  pool.reserve(models.size());
  for (const auto& [node_id, params] : models) {
    const ModelNode* node = tree.find(node_id);
    pool.push_back(ModelPoolEntry{node_id, node ? node->depth : 0, params});
  }
  return pool;
}

/// Per record: generate candidates over the whole model pool, then select.
/// Records whose candidates all fail the constraints come back as
/// no_valid_candidate (counted as attack failures downstream).
inline std::vector<SelectionResult> run_pipeline(const std::vector<TextRecord>& records,
                                                 const ModelTree& tree,
                                                 const std::vector<AttackMethod>& methods,
                                                 const AttackBudget& budget,
                                                 const SelectConfig& config,
                                                 const Embedder& embedder,
                                                 const Lexicon& lexicon,
                                                 const CooccurrenceTable* cooc) {
  config.validate();
  if (methods.empty()) throw std::invalid_argument("run_pipeline: empty method list");
  auto pool = pool_from_tree(tree);
  std::vector<SelectionResult> results;
  results.reserve(records.size());
  for (const auto& record : records) {
    AttackInput input = make_attack_input(record);
    auto candidates =
        generate_candidates(input, pool, methods, embedder, lexicon, cooc, budget);
    SelectionResult result = select_final(candidates, config);
    result.original_id = record.id;
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace shade
