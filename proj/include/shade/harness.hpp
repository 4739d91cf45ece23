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

#include <atomic>
#include <ctime>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shade/config.hpp"
#include "shade/select.hpp"

namespace shade {

/// The desk-scale victim model behind a query counter. Attack-phase code
/// never holds a reference to this object; the counter makes the zero-query
/// property measurable rather than assumed.
class VictimGateway {
 public:
  enum class Phase { attack, evaluation };

  VictimGateway(ClassifierParams params, std::unique_ptr<Embedder> embedder)
      : params_(std::move(params)), embedder_(std::move(embedder)) {}

  Prediction query(const TokenizedText& text) {
    counter_.fetch_add(1, std::memory_order_relaxed);
    return predict(params_, embedder_->embed(text));
  }

  /// Freezes the attack-phase counter; evaluation queries are not charged
  /// to the attack.
  void switch_to_evaluation() {
    if (phase_ == Phase::evaluation) return;
    attack_queries_ = counter_.load(std::memory_order_relaxed);
    phase_ = Phase::evaluation;
  }

  Phase phase() const { return phase_; }
  long long query_count() const { return counter_.load(std::memory_order_relaxed); }
  long long attack_phase_queries() const {
    return phase_ == Phase::evaluation ? attack_queries_
                                       : counter_.load(std::memory_order_relaxed);
  }
  std::size_t num_classes() const { return params_.num_classes; }
  const ClassifierParams& params() const { return params_; }

 private:
  ClassifierParams params_;
  std::unique_ptr<Embedder> embedder_;
  std::atomic<long long> counter_{0};
  Phase phase_ = Phase::attack;
  long long attack_queries_ = 0;
};

/// Trains the K-way victim on labeled records with its own embedder fitted
/// over its own training corpus. The gateway starts in the attack phase
/// with a zeroed counter.
inline VictimGateway train_victim(const std::vector<TextRecord>& labeled, int num_classes,
                                  const TrainConfig& config,
                                  const std::string& embedder_kind = "tfidf") {
  if (num_classes < 2) throw std::invalid_argument("train_victim: need at least 2 classes");
  std::vector<TokenizedText> tokenized;
  tokenized.reserve(labeled.size());
  for (const auto& rec : labeled) {
    if (!rec.label.has_value())
      throw std::invalid_argument("train_victim: record \"" + rec.id + "\" has no label");
    if (*rec.label < 0 || *rec.label >= num_classes)
      throw std::invalid_argument("train_victim: label " + std::to_string(*rec.label) +
                                  " out of range");
    tokenized.push_back(tokenize(rec));
  }

  std::unique_ptr<Embedder> embedder;
  if (embedder_kind == "tfidf")
    embedder = std::make_unique<TfidfEmbedder>(fit_vocabulary(tokenized, 1));
  else if (embedder_kind == "onehot")
    embedder = std::make_unique<OneHotEmbedder>(fit_vocabulary(tokenized, 1));
  else if (embedder_kind == "hashed")
    embedder = std::make_unique<HashedEmbedder>(512, derive_seed(config.seed, 0x71c));
  else
    throw std::invalid_argument("train_victim: unknown embedder \"" + embedder_kind + "\"");

  std::vector<std::pair<EmbeddingVector, int>> data;
  data.reserve(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i)
    data.emplace_back(embedder->embed(tokenized[i]), *labeled[i].label);
  auto trained = train_kway(data, static_cast<std::size_t>(num_classes), config);
  return VictimGateway(std::move(trained.params), std::move(embedder));
}

struct PerExample {
  std::string id;
  std::string outcome;  // "flipped" | "unchanged" | "no_valid_candidate"
  int victim_label_before = -1;
  int victim_label_after = -1;  // -1 when there was no adversarial text
  std::optional<double> similarity;
  std::optional<int> gold_label;
};

struct EvalReport {
  double asr = 0.0;                     // flips over all submitted records
  double asr_originally_correct = 0.0;  // flips over records the victim got right
  double mean_sim = 0.0;                // over selected records
  long long attack_queries = 0;
  std::size_t attacked_count = 0;
  std::size_t selected_count = 0;
  std::size_t flipped_count = 0;
  bool no_attacks = false;
  std::string embedder_id;  // labels the similarity column
  std::uint64_t seed = 0;
  nlohmann::json config_snapshot;
  std::vector<PerExample> per_example;
};

/// Queries the victim on the original and (when selected) adversarial text
/// of every record. Success means the victim's label changed; gold labels
/// are never consulted for that decision, only for the originally-correct
/// ASR breakout.
inline EvalReport evaluate(const std::vector<SelectionResult>& results,
                           VictimGateway& gateway, const std::vector<TextRecord>& originals) {
  if (gateway.phase() != VictimGateway::Phase::evaluation)
    throw std::logic_error("evaluate: gateway still in attack phase");
  std::map<std::string, const TextRecord*> by_id;
  for (const auto& rec : originals) by_id[rec.id] = &rec;

  EvalReport report;
  report.attack_queries = gateway.attack_phase_queries();
  report.attacked_count = results.size();
  double sim_sum = 0.0;
  std::size_t correct_before = 0, correct_flipped = 0;
  for (const auto& result : results) {
    auto it = by_id.find(result.original_id);
    if (it == by_id.end())
      throw std::invalid_argument("evaluate: unknown record id \"" + result.original_id + "\"");
    const TextRecord& rec = *it->second;

    PerExample ex;
    ex.id = rec.id;
    ex.gold_label = rec.label;
    ex.victim_label_before = gateway.query(tokenize(rec)).predicted;
    if (result.outcome == SelectionOutcome::selected) {
      ++report.selected_count;
      ex.victim_label_after =
          gateway.query(tokenize(rec.id, result.chosen->adv_text)).predicted;
      ex.similarity = result.chosen->similarity;
      sim_sum += result.chosen->similarity;
      bool flipped = ex.victim_label_after != ex.victim_label_before;
      ex.outcome = flipped ? "flipped" : "unchanged";
      if (flipped) ++report.flipped_count;
    } else {
      ex.outcome = "no_valid_candidate";
    }
    if (rec.label.has_value() && *rec.label == ex.victim_label_before) {
      ++correct_before;
      if (ex.outcome == "flipped") ++correct_flipped;
    }
    report.per_example.push_back(std::move(ex));
  }

  if (report.attacked_count == 0) {
    report.no_attacks = true;
  } else {
    report.asr = static_cast<double>(report.flipped_count) /
                 static_cast<double>(report.attacked_count);
  }
  if (report.selected_count > 0)
    report.mean_sim = sim_sum / static_cast<double>(report.selected_count);
  report.asr_originally_correct =
      correct_before > 0
          ? static_cast<double>(correct_flipped) / static_cast<double>(correct_before)
          : 0.0;
  return report;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["asr"] = report.asr;
  j["asr_originally_correct"] = report.asr_originally_correct;
  j["mean_sim"] = report.mean_sim;
  j["sim_embedder"] = report.embedder_id;
  j["attack_queries"] = report.attack_queries;
  j["attacked_count"] = report.attacked_count;
  j["selected_count"] = report.selected_count;
  j["flipped_count"] = report.flipped_count;
  j["no_attacks"] = report.no_attacks;
  j["seed"] = report.seed;
  j["config"] = report.config_snapshot;
  j["generated_at"] = static_cast<long long>(::time(nullptr));
  j["per_example"] = nlohmann::json::array();
  for (const auto& ex : report.per_example) {
    nlohmann::json je;
    je["id"] = ex.id;
    je["outcome"] = ex.outcome;
    je["victim_label_before"] = ex.victim_label_before;
    je["victim_label_after"] = ex.victim_label_after;
    if (ex.similarity) je["similarity"] = *ex.similarity;
    if (ex.gold_label) je["gold_label"] = *ex.gold_label;
    j["per_example"].push_back(je);
  }
  return j;
}

/// The replay contract compares reports with the timestamp stripped.
inline std::string canonical_report_json(nlohmann::json report) {
  report.erase("generated_at");
  return report.dump(2);
}

struct RunArtifacts {
  ShadowSynthesis shadow;
  ModelTree tree;
  std::vector<AttackCandidate> candidates;
  std::vector<SelectionResult> results;
  EvalReport report;
};

/// One full end-to-end run: victim first (so the gateway exists during the
/// attack phase and its counter means something), then shadow synthesis,
/// tree training, candidate generation, selection, and evaluation.
inline RunArtifacts run_end_to_end(const Config& config) {
  config.select_config();  // validate early
  if (config.embedder == "precomputed")
    throw std::invalid_argument(
        "precomputed vectors cannot embed perturbed texts; the attack stage "
        "needs onehot, tfidf, or hashed");
  auto records = load_corpus(config.corpus);
  auto labeled = load_corpus(config.labeled_corpus, true);
  auto lexicon = load_lexicon(config.lexicon);

  int num_classes = 0;
  for (const auto& rec : labeled) num_classes = std::max(num_classes, *rec.label + 1);
  TrainConfig victim_train = config.train_config();
  victim_train.seed = derive_seed(config.seed, 0x71c71);
  VictimGateway gateway = train_victim(labeled, num_classes, victim_train,
                                       config.victim_embedder);

  std::vector<TokenizedText> tokenized;
  tokenized.reserve(records.size());
  for (const auto& rec : records) tokenized.push_back(tokenize(rec));
  auto embedder = make_embedder(config, tokenized);

  RunArtifacts artifacts;
  artifacts.shadow = synthesize_shadow(tokenized, *embedder,
                                       derive_seed(config.seed, 0x5adb), config.k,
                                       config.restarts);
  artifacts.tree = build_tree(tokenized, *embedder, config.tree_config());

  CooccurrenceTable cooc;
  cooc.fit(tokenized);
  auto pool = pool_from_tree(artifacts.tree);
  auto methods = config.method_list();
  auto budget = config.attack_budget();
  auto select_cfg = config.select_config();
  for (const auto& record : records) {
    AttackInput input = make_attack_input(record);
    auto cands = generate_candidates(input, pool, methods, *embedder, lexicon, &cooc, budget);
    auto result = select_final(cands, select_cfg);
    result.original_id = record.id;
    artifacts.results.push_back(std::move(result));
    for (auto& c : cands) artifacts.candidates.push_back(std::move(c));
  }

  // Zero-query invariant: generation never touched the gateway.
  if (gateway.query_count() != 0)
    throw std::logic_error("zero-query invariant violated: victim was queried during attack");

  gateway.switch_to_evaluation();
  artifacts.report = evaluate(artifacts.results, gateway, records);
  artifacts.report.embedder_id = embedder->id();
  artifacts.report.seed = config.seed;
  artifacts.report.config_snapshot = config.to_json();
  return artifacts;
}

// --- ablation driver ---

struct AblationRow {
  std::string value;
  std::vector<EvalReport> per_seed;
  double mean_asr = 0.0;
  double mean_sim = 0.0;
};

struct AblationTable {
  std::string axis;
  std::vector<AblationRow> rows;
};

/// The method sets used for the method-count ablation, nested by
/// construction.
inline std::string method_set_for_count(int count) {
  switch (count) {
    case 1: return "grad_flip";
    case 3: return "grad_flip,charbug,pso";
    case 5: return "grad_flip,grad_synonym,charbug,pso,masked_replace";
    default:
      throw std::invalid_argument("method_count ablation supports 1, 3, or 5 methods");
  }
}

inline Config apply_axis(Config config, const std::string& axis, const std::string& value) {
  if (axis == "cluster_k") {
    config.k = std::stoi(value);
    if (config.k < 2 || config.k > 4)
      throw std::invalid_argument("cluster_k ablation supports k in [2,4]");
    if (config.k > 2) config.tree_depth = 0;  // the hierarchy splits are binary
  } else if (axis == "tree_depth") {
    config.tree_depth = std::stoi(value);
    if (config.tree_depth < 0) throw std::invalid_argument("tree_depth must be >= 0");
  } else if (axis == "method_count") {
    config.methods = method_set_for_count(std::stoi(value));
  } else if (axis == "embedder") {
    if (value != "onehot" && value != "tfidf" && value != "hashed")
      throw std::invalid_argument("embedder ablation supports onehot, tfidf, hashed");
    config.embedder = value;
  } else {
    throw std::invalid_argument("unknown ablation axis \"" + axis + "\"");
  }
  return config;
}

/// Re-runs the full pipeline per axis value with a shared seed set.
inline AblationTable run_ablation(const std::string& axis,
                                  const std::vector<std::string>& values,
                                  const Config& base, int n_seeds = 5) {
  if (values.empty()) throw std::invalid_argument("run_ablation: no values");
  if (n_seeds < 1) throw std::invalid_argument("run_ablation: n_seeds must be >= 1");
  AblationTable table;
  table.axis = axis;
  for (const auto& value : values) {
    AblationRow row;
    row.value = value;
    for (int s = 0; s < n_seeds; ++s) {
      Config cfg = apply_axis(base, axis, value);
      cfg.seed = derive_seed(base.seed, 0xab1a, static_cast<std::uint64_t>(s));
      auto artifacts = run_end_to_end(cfg);
      row.mean_asr += artifacts.report.asr;
      row.mean_sim += artifacts.report.mean_sim;
      row.per_seed.push_back(std::move(artifacts.report));
    }
    row.mean_asr /= n_seeds;
    row.mean_sim /= n_seeds;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace shade
