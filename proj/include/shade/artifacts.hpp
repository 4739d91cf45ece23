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

// Run-directory artifact emission: every file format another tool might
// consume lives here, in one place.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shade/cluster.hpp"
#include "shade/common.hpp"
#include "shade/harness.hpp"
#include "shade/select.hpp"

namespace shade {

inline void write_text_file(const std::string& path, const std::string& content) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Shadow dataset: one `{"id","pseudo_label"}` object per line, plus a
/// sidecar with the centroids and provenance.
inline void write_shadow(const ShadowSynthesis& shadow, const std::string& jsonl_path,
                         const std::string& sidecar_path, std::uint64_t seed,
                         const std::string& embedder_id) {
  std::string body;
  for (const auto& ex : shadow.examples) {
    nlohmann::json j;
    j["id"] = ex.record_id;
    j["pseudo_label"] = ex.pseudo_label;
    body += j.dump();
    body += '\n';
  }
  write_text_file(jsonl_path, body);

  nlohmann::json meta;
  meta["k"] = shadow.model.k;
  meta["seed"] = seed;
  meta["embedder_id"] = embedder_id;
  meta["inertia"] = shadow.model.inertia;
  meta["iterations_run"] = shadow.model.iterations_run;
  meta["centroids"] = nlohmann::json::array();
  for (const auto& c : shadow.model.centroids) meta["centroids"].push_back(c.values);
  write_text_file(sidecar_path, meta.dump(2) + "\n");
}

inline nlohmann::json candidate_to_json(const AttackCandidate& c) {
  nlohmann::json j;
  j["original_id"] = c.original_id;
  j["method_id"] = c.method_id;
  j["method"] = method_name(static_cast<AttackMethod>(c.method_id));
  j["model_node_id"] = c.model_node_id;
  j["model_depth"] = c.model_depth;
  j["adv_text"] = c.adv_text;
  j["adv_tokens"] = c.adv_tokens;
  j["prob_drop"] = c.prob_drop;
  j["similarity"] = c.similarity;
  j["flipped_on_substitute"] = c.flipped_on_substitute;
  j["word_edits"] = c.word_edits;
  j["char_edits"] = c.char_edits;
  return j;
}

inline void write_candidates(const std::vector<AttackCandidate>& candidates,
                             const std::string& path) {
  std::string body;
  for (const auto& c : candidates) {
    body += candidate_to_json(c).dump();
    body += '\n';
  }
  write_text_file(path, body);
}

inline void write_selections(const std::vector<SelectionResult>& results,
                             const std::string& path) {
  std::string body;
  for (const auto& r : results) {
    nlohmann::json j;
    j["id"] = r.original_id;
    j["outcome"] =
        r.outcome == SelectionOutcome::selected ? "selected" : "no_valid_candidate";
    if (r.chosen) {
      j["adv_text"] = r.chosen->adv_text;
      j["score"] = *r.score;
      j["method_id"] = r.chosen->method_id;
      j["method"] = method_name(static_cast<AttackMethod>(r.chosen->method_id));
      j["model_node_id"] = r.chosen->model_node_id;
      j["prob_drop"] = r.chosen->prob_drop;
      j["similarity"] = r.chosen->similarity;
    }
    j["rejections"] = nlohmann::json::array();
    for (const auto& rej : r.rejected) {
      nlohmann::json jr;
      jr["candidate_index"] = rej.candidate_index;
      jr["reason"] = rej.reason;
      j["rejections"].push_back(jr);
    }
    body += j.dump();
    body += '\n';
  }
  write_text_file(path, body);
}

/// Run manifest: content fingerprints of every artifact in the run
/// directory (FNV-1a 64, hex; an integrity fingerprint, not a MAC).
inline void write_manifest(const std::string& run_dir, const std::vector<std::string>& files) {
  nlohmann::json j;
  j["artifacts"] = nlohmann::json::object();
  for (const auto& file : files) {
    auto path = std::filesystem::path(run_dir) / file;
    if (!std::filesystem::exists(path)) continue;
    std::string content = read_text_file(path.string());
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content)));
    nlohmann::json entry;
    entry["bytes"] = content.size();
    entry["fnv1a64"] = hex;
    j["artifacts"][file] = entry;
  }
  write_text_file((std::filesystem::path(run_dir) / "manifest.json").string(),
                  j.dump(2) + "\n");
}

/// Reads a selections file back for a later `evaluate` step. Only the
/// fields evaluation needs are reconstructed.
inline std::vector<SelectionResult> load_selections(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing selections");
  std::vector<SelectionResult> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    SelectionResult r;
    r.original_id = j.at("id").get<std::string>();
    if (j.at("outcome").get<std::string>() == "selected") {
      r.outcome = SelectionOutcome::selected;
      AttackCandidate c;
      c.original_id = r.original_id;
      c.adv_text = j.at("adv_text").get<std::string>();
      c.method_id = j.at("method_id").get<int>();
      c.model_node_id = j.at("model_node_id").get<int>();
      c.prob_drop = j.at("prob_drop").get<double>();
      c.similarity = j.at("similarity").get<double>();
      r.chosen = std::move(c);
      r.score = j.at("score").get<double>();
    } else {
      r.outcome = SelectionOutcome::no_valid_candidate;
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Relative paths of every artifact under a run directory (manifest
/// excluded), sorted for determinism.
inline std::vector<std::string> scan_run_dir(const std::string& run_dir) {
  std::vector<std::string> files;
  if (!std::filesystem::exists(run_dir)) return files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file()) continue;
    auto rel = std::filesystem::relative(entry.path(), run_dir).generic_string();
    if (rel == "manifest.json") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline nlohmann::json ablation_to_json(const AblationTable& table) {
  nlohmann::json j;
  j["axis"] = table.axis;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json jr;
    jr["value"] = row.value;
    jr["mean_asr"] = row.mean_asr;
    jr["mean_sim"] = row.mean_sim;
    jr["per_seed"] = nlohmann::json::array();
    for (const auto& rep : row.per_seed) {
      nlohmann::json js;
      js["asr"] = rep.asr;
      js["mean_sim"] = rep.mean_sim;
      js["seed"] = rep.seed;
      jr["per_seed"].push_back(js);
    }
    j["rows"].push_back(jr);
  }
  return j;
}

}  // namespace shade
