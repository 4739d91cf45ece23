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

// Command-line entry point. Subcommands mirror the pipeline stages:
//   ingest -> shadow -> train-tree -> attack -> evaluate
// plus `report` (all stages in one process), `ablate`, and `simulate`.
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shade/artifacts.hpp"
#include "shade/config.hpp"
#include "shade/harness.hpp"
#include "shade/theory.hpp"

namespace {

// Raised during the input-validation stage of a subcommand; maps to exit 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kConfigKeys = {
    "embedder", "dim", "min_count", "max_vocab", "k", "tree_depth", "min_node_size",
    "restarts", "hidden_width", "learning_rate", "epochs", "batch_size", "l2_penalty",
    "methods", "max_word_edits", "max_char_edits", "pso_particles", "pso_iterations",
    "alpha", "beta", "eps_prime", "eps_star", "seed", "corpus", "labeled_corpus",
    "lexicon", "run_dir", "vectors", "victim_embedder"};

// Every config key is also a CLI flag (`--key value`) overriding the file.
struct ConfigCli {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    for (const auto& key : kConfigKeys) {
      cmd->add_option_function<std::string>(
          "--" + key, [this, key](const std::string& value) { overrides[key] = value; });
    }
  }

  shade::Config resolve() const {
    shade::Config cfg;
    if (!config_path.empty()) {
      try {
        cfg = shade::Config::from_file(config_path);
      } catch (const std::exception& e) {
        throw ValidationError(e.what());
      }
    }
    for (const auto& [key, value] : overrides) {
      try {
        cfg.set(key, value);
      } catch (const std::exception& e) {
        throw ValidationError(e.what());
      }
    }
    return cfg;
  }
};

void require_paths(const shade::Config& cfg, const std::vector<std::string>& keys) {
  try {
    cfg.require_paths(keys);
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
}

std::filesystem::path run_path(const shade::Config& cfg, const std::string& rel) {
  return std::filesystem::path(cfg.run_dir) / rel;
}

void refresh_manifest(const shade::Config& cfg) {
  shade::write_manifest(cfg.run_dir, shade::scan_run_dir(cfg.run_dir));
}

// Loads and fully validates the victim-text corpus (every record must
// tokenize).
std::vector<shade::TextRecord> load_victim_corpus(const shade::Config& cfg) {
  std::vector<shade::TextRecord> records;
  try {
    records = shade::load_corpus(cfg.corpus);
    for (const auto& rec : records) shade::tokenize(rec);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("corpus: ") + e.what());
  }
  if (records.empty()) throw ValidationError("corpus: no records");
  return records;
}

shade::Lexicon load_lexicon_checked(const shade::Config& cfg) {
  try {
    return shade::load_lexicon(cfg.lexicon);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("lexicon: ") + e.what());
  }
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

void cmd_ingest(const shade::Config& cfg, double split_fraction, std::uint64_t split_seed) {
  require_paths(cfg, {"corpus", "run_dir"});
  auto records = load_victim_corpus(cfg);
  if (!cfg.lexicon.empty()) load_lexicon_checked(cfg);

  shade::write_text_file(run_path(cfg, "corpus.normalized.jsonl").string(),
                         shade::serialize_corpus(records));
  if (split_fraction > 0.0) {
    if (split_fraction >= 1.0) throw ValidationError("fraction outside (0,1)");
    auto [victim, holdout] = shade::split_victim_and_holdout(records, split_fraction, split_seed);
    shade::write_text_file(run_path(cfg, "corpus_victim.jsonl").string(),
                           shade::serialize_corpus(victim));
    shade::write_text_file(run_path(cfg, "corpus_holdout.jsonl").string(),
                           shade::serialize_corpus(holdout));
    std::printf("ingested %zu records (split %zu victim / %zu holdout)\n", records.size(),
                victim.size(), holdout.size());
  } else {
    std::printf("ingested %zu records\n", records.size());
  }
  refresh_manifest(cfg);
}

void cmd_shadow(const shade::Config& cfg) {
  require_paths(cfg, {"corpus", "run_dir"});
  auto records = load_victim_corpus(cfg);
  std::vector<shade::TokenizedText> tokenized;
  for (const auto& rec : records) tokenized.push_back(shade::tokenize(rec));
  auto embedder = shade::make_embedder(cfg, tokenized);
  auto shadow = shade::synthesize_shadow(tokenized, *embedder,
                                         shade::derive_seed(cfg.seed, 0x5adb), cfg.k,
                                         cfg.restarts);
  shade::write_shadow(shadow, run_path(cfg, "shadow.jsonl").string(),
                      run_path(cfg, "shadow_meta.json").string(), cfg.seed, embedder->id());
  std::size_t positive = 0;
  for (const auto& ex : shadow.examples)
    if (ex.pseudo_label == 0) ++positive;
  std::printf("shadow dataset: %zu records, %zu in the dominant cluster, inertia %.6f\n",
              shadow.examples.size(), positive, shadow.model.inertia);
  refresh_manifest(cfg);
}

void cmd_train_tree(const shade::Config& cfg) {
  require_paths(cfg, {"corpus", "run_dir"});
  auto records = load_victim_corpus(cfg);
  std::vector<shade::TokenizedText> tokenized;
  for (const auto& rec : records) tokenized.push_back(shade::tokenize(rec));
  auto embedder = shade::make_embedder(cfg, tokenized);
  auto tree = shade::build_tree(tokenized, *embedder, cfg.tree_config());
  shade::save_tree(tree, run_path(cfg, "tree").string());
  std::printf("trained %zu substitute models (depth %d, %zu pruned)\n", tree.total_models(),
              tree.u, tree.pruned.size());
  refresh_manifest(cfg);
}

void cmd_attack(const shade::Config& cfg) {
  require_paths(cfg, {"corpus", "lexicon", "run_dir"});
  if (cfg.embedder == "precomputed")
    throw ValidationError(
        "precomputed vectors cannot embed perturbed texts; the attack stage "
        "needs onehot, tfidf, or hashed");
  if (!std::filesystem::exists(run_path(cfg, "tree/manifest.json")))
    throw ValidationError("missing tree manifest");
  auto records = load_victim_corpus(cfg);
  auto lexicon = load_lexicon_checked(cfg);
  auto tree = shade::load_tree(run_path(cfg, "tree").string());

  std::vector<shade::TokenizedText> tokenized;
  for (const auto& rec : records) tokenized.push_back(shade::tokenize(rec));
  auto embedder = shade::make_embedder(cfg, tokenized);
  shade::CooccurrenceTable cooc;
  cooc.fit(tokenized);

  auto pool = shade::pool_from_tree(tree);
  auto methods = cfg.method_list();
  auto budget = cfg.attack_budget();
  auto select_cfg = cfg.select_config();
  std::vector<shade::AttackCandidate> candidates;
  std::vector<shade::SelectionResult> results;
  std::size_t selected = 0;
  for (const auto& rec : records) {
    auto input = shade::make_attack_input(rec);
    auto cands =
        shade::generate_candidates(input, pool, methods, *embedder, lexicon, &cooc, budget);
    auto result = shade::select_final(cands, select_cfg);
    result.original_id = rec.id;
    if (result.outcome == shade::SelectionOutcome::selected) ++selected;
    results.push_back(std::move(result));
    for (auto& c : cands) candidates.push_back(std::move(c));
  }
  shade::write_candidates(candidates, run_path(cfg, "candidates.jsonl").string());
  shade::write_selections(results, run_path(cfg, "selections.jsonl").string());
  std::printf("attacked %zu records: %zu selected, %zu candidates dumped\n", records.size(),
              selected, candidates.size());
  refresh_manifest(cfg);
}

void cmd_evaluate(const shade::Config& cfg) {
  require_paths(cfg, {"corpus", "labeled_corpus", "run_dir"});
  if (!std::filesystem::exists(run_path(cfg, "selections.jsonl")))
    throw ValidationError("missing selections");
  auto records = load_victim_corpus(cfg);
  std::vector<shade::TextRecord> labeled;
  try {
    labeled = shade::load_corpus(cfg.labeled_corpus, true);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("labeled_corpus: ") + e.what());
  }
  auto results = shade::load_selections(run_path(cfg, "selections.jsonl").string());

  int num_classes = 0;
  for (const auto& rec : labeled) num_classes = std::max(num_classes, *rec.label + 1);
  shade::TrainConfig victim_train = cfg.train_config();
  victim_train.seed = shade::derive_seed(cfg.seed, 0x71c71);
  auto gateway = shade::train_victim(labeled, num_classes, victim_train, cfg.victim_embedder);
  gateway.switch_to_evaluation();
  auto report = shade::evaluate(results, gateway, records);
  report.seed = cfg.seed;
  report.config_snapshot = cfg.to_json();
  shade::write_text_file(run_path(cfg, "report.json").string(),
                         shade::report_to_json(report).dump(2) + "\n");
  std::printf("asr %.4f (originally-correct %.4f), mean sim %.4f, attack queries %lld\n",
              report.asr, report.asr_originally_correct, report.mean_sim,
              report.attack_queries);
  refresh_manifest(cfg);
}

void cmd_report(const shade::Config& cfg) {
  require_paths(cfg, {"corpus", "labeled_corpus", "lexicon", "run_dir"});
  shade::RunArtifacts artifacts;
  try {
    artifacts = shade::run_end_to_end(cfg);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  auto records = shade::load_corpus(cfg.corpus);
  shade::write_text_file(run_path(cfg, "corpus.normalized.jsonl").string(),
                         shade::serialize_corpus(records));
  shade::write_shadow(artifacts.shadow, run_path(cfg, "shadow.jsonl").string(),
                      run_path(cfg, "shadow_meta.json").string(), cfg.seed,
                      artifacts.report.embedder_id);
  shade::save_tree(artifacts.tree, run_path(cfg, "tree").string());
  shade::write_candidates(artifacts.candidates, run_path(cfg, "candidates.jsonl").string());
  shade::write_selections(artifacts.results, run_path(cfg, "selections.jsonl").string());
  shade::write_text_file(run_path(cfg, "report.json").string(),
                         shade::report_to_json(artifacts.report).dump(2) + "\n");
  refresh_manifest(cfg);
  std::printf("asr %.4f (originally-correct %.4f), mean sim %.4f, attack queries %lld\n",
              artifacts.report.asr, artifacts.report.asr_originally_correct,
              artifacts.report.mean_sim, artifacts.report.attack_queries);
}

void cmd_ablate(const shade::Config& cfg, const std::string& axis, const std::string& values,
                int seeds) {
  require_paths(cfg, {"corpus", "labeled_corpus", "lexicon", "run_dir"});
  std::vector<std::string> value_list;
  std::stringstream ss(values);
  std::string v;
  while (std::getline(ss, v, ','))
    if (!v.empty()) value_list.push_back(v);
  if (value_list.empty()) throw ValidationError("ablate: no values given");

  shade::AblationTable table;
  try {
    table = shade::run_ablation(axis, value_list, cfg, seeds);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  shade::write_text_file(run_path(cfg, "ablation_" + axis + ".json").string(),
                         shade::ablation_to_json(table).dump(2) + "\n");
  std::printf("%-12s %10s %10s\n", axis.c_str(), "mean ASR", "mean Sim");
  for (const auto& row : table.rows)
    std::printf("%-12s %10.4f %10.4f\n", row.value.c_str(), row.mean_asr, row.mean_sim);
  refresh_manifest(cfg);
}

std::vector<double> parse_prob_list(const std::string& csv) {
  std::vector<double> probs;
  std::stringstream ss(csv);
  std::string field;
  while (std::getline(ss, field, ','))
    if (!field.empty()) probs.push_back(std::stod(field));
  if (probs.empty()) throw ValidationError("simulate: empty probability list");
  return probs;
}

void cmd_simulate(const std::string& theorem, const std::string& m_csv, double p,
                  const std::string& probs_csv, long long trials, std::uint64_t seed,
                  const std::string& dist, double beta_a, double beta_b, double point) {
  if (theorem == "1") {
    shade::SimSpec spec;
    spec.threshold = p;
    spec.trials = trials;
    spec.seed = seed;
    if (dist == "uniform01") spec.dist = shade::Distribution::uniform01;
    else if (dist == "beta") spec.dist = shade::Distribution::beta;
    else if (dist == "point_mass") spec.dist = shade::Distribution::point_mass;
    else throw ValidationError("simulate: unknown distribution \"" + dist + "\"");
    spec.beta_a = beta_a;
    spec.beta_b = beta_b;
    spec.point = point;

    std::printf("%6s %12s %12s %12s\n", "m", "empirical", "closed-form", "abs error");
    std::stringstream ss(m_csv);
    std::string field;
    while (std::getline(ss, field, ',')) {
      if (field.empty()) continue;
      spec.m = std::stoi(field);
      spec.seed = shade::derive_seed(seed, static_cast<std::uint64_t>(spec.m));
      auto r = shade::mc_max_exceeds(spec);
      std::printf("%6d %12.5f %12.5f %12.5f\n", spec.m, r.empirical, r.closed_form,
                  std::abs(r.empirical - r.closed_form));
    }
  } else if (theorem == "2") {
    auto probs = parse_prob_list(probs_csv);
    auto r = shade::mc_similarity_coverage(probs, trials, seed);
    std::printf("%6s %12s %12s %12s\n", "w", "empirical", "closed-form", "abs error");
    std::printf("%6zu %12.5f %12.5f %12.5f  (coverage)\n", probs.size(),
                r.empirical_coverage, r.closed_coverage,
                std::abs(r.empirical_coverage - r.closed_coverage));
    std::printf("%6zu %12.5f %12.5f %12.5f  (mu)\n", probs.size(), r.empirical_mu,
                r.closed_mu, std::abs(r.empirical_mu - r.closed_mu));
  } else if (theorem == "bound") {
    auto probs = parse_prob_list(probs_csv);
    auto r = shade::bound_ps(probs);
    std::printf("%6s %12s %12s %12s\n", "m", "exact", "bound", "margin");
    std::printf("%6zu %12.5f %12.5f %12.5f\n", probs.size(), r.exact, r.bound,
                r.exact - r.bound);
  } else {
    throw ValidationError("simulate: --theorem must be 1, 2, or bound");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-query textual adversarial attack toolkit"};
  app.require_subcommand(1);

  ConfigCli ingest_cfg, shadow_cfg, tree_cfg, attack_cfg, eval_cfg, report_cfg, ablate_cfg;
  double split_fraction = 0.0;
  std::uint64_t split_seed = 1;
  auto* ingest = app.add_subcommand("ingest", "validate and normalize the corpus");
  ingest_cfg.attach(ingest);
  ingest->add_option("--split-fraction", split_fraction,
                     "optionally split off a victim subset (0 disables)");
  ingest->add_option("--split-seed", split_seed, "seed for the split shuffle");

  auto* shadow = app.add_subcommand("shadow", "cluster and pseudo-label the victim texts");
  shadow_cfg.attach(shadow);
  auto* train_tree = app.add_subcommand("train-tree", "train the substitute model tree");
  tree_cfg.attach(train_tree);
  auto* attack = app.add_subcommand("attack", "generate candidates and select per record");
  attack_cfg.attach(attack);
  auto* evaluate = app.add_subcommand("evaluate", "score selections against the victim");
  eval_cfg.attach(evaluate);
  auto* report = app.add_subcommand("report", "run the whole pipeline in one process");
  report_cfg.attach(report);

  std::string axis = "tree_depth", values = "0,1,2";
  int ablate_seeds = 5;
  auto* ablate = app.add_subcommand("ablate", "re-run the pipeline across one axis");
  ablate_cfg.attach(ablate);
  ablate->add_option("--axis", axis, "cluster_k | tree_depth | method_count | embedder");
  ablate->add_option("--values", values, "comma-separated axis values");
  ablate->add_option("--ablate-seeds", ablate_seeds, "seeds per value");

  std::string theorem = "1", m_csv = "5", probs_csv = "0.5,0.5", dist = "uniform01";
  double p = 0.9, beta_a = 2.0, beta_b = 2.0, point = 0.5;
  long long trials = 100000;
  std::uint64_t sim_seed = 1;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo checks of the theory claims");
  simulate->add_option("--theorem", theorem, "1, 2, or bound");
  simulate->add_option("--m", m_csv, "model counts (comma list) for theorem 1");
  simulate->add_option("--p", p, "threshold for theorem 1");
  simulate->add_option("--probs", probs_csv, "per-method probabilities for theorem 2 / bound");
  simulate->add_option("--trials", trials, "Monte Carlo trials");
  simulate->add_option("--seed", sim_seed, "simulation seed");
  simulate->add_option("--dist", dist, "uniform01 | beta | point_mass");
  simulate->add_option("--beta-a", beta_a, "beta shape a");
  simulate->add_option("--beta-b", beta_b, "beta shape b");
  simulate->add_option("--point", point, "point-mass location");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad usage is a validation error
  }

  if (ingest->parsed())
    return guarded([&] { cmd_ingest(ingest_cfg.resolve(), split_fraction, split_seed); });
  if (shadow->parsed()) return guarded([&] { cmd_shadow(shadow_cfg.resolve()); });
  if (train_tree->parsed()) return guarded([&] { cmd_train_tree(tree_cfg.resolve()); });
  if (attack->parsed()) return guarded([&] { cmd_attack(attack_cfg.resolve()); });
  if (evaluate->parsed()) return guarded([&] { cmd_evaluate(eval_cfg.resolve()); });
  if (report->parsed()) return guarded([&] { cmd_report(report_cfg.resolve()); });
  if (ablate->parsed())
    return guarded([&] { cmd_ablate(ablate_cfg.resolve(), axis, values, ablate_seeds); });
  if (simulate->parsed())
    return guarded([&] {
      cmd_simulate(theorem, m_csv, p, probs_csv, trials, sim_seed, dist, beta_a, beta_b,
                   point);
    });
  return 1;
}
