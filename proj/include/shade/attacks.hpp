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
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "shade/common.hpp"
#include "shade/corpus.hpp"
#include "shade/embed.hpp"
#include "shade/substitute.hpp"

namespace shade {

// Perturbation engines. Every engine sees only a substitute model's
// parameters; none of them can reach the victim, so attack generation is
// zero-query by construction. The target class y_hat is always the
// substitute's own prediction for the original text, and every engine
// tries to reduce p_{y_hat}.

enum class AttackMethod : int {
  grad_flip = 0,       // exact greedy word substitution, gradient-salience ordered
  grad_synonym = 1,    // first-order (gradient dot embedding-delta) word substitution
  charbug = 2,         // character-level swaps/deletes/duplicates/homoglyphs
  pso = 3,             // particle-swarm search over synonym assignments
  masked_replace = 4,  // co-occurrence-proposed context fillers
};

inline const char* method_name(AttackMethod m) {
  switch (m) {
    case AttackMethod::grad_flip: return "grad_flip";
    case AttackMethod::grad_synonym: return "grad_synonym";
    case AttackMethod::charbug: return "charbug";
    case AttackMethod::pso: return "pso";
    case AttackMethod::masked_replace: return "masked_replace";
  }
  return "unknown";
}

inline AttackMethod parse_method(const std::string& name) {
  if (name == "grad_flip") return AttackMethod::grad_flip;
  if (name == "grad_synonym") return AttackMethod::grad_synonym;
  if (name == "charbug") return AttackMethod::charbug;
  if (name == "pso") return AttackMethod::pso;
  if (name == "masked_replace") return AttackMethod::masked_replace;
  throw std::invalid_argument("unknown attack method \"" + name + "\"");
}

struct AttackBudget {
  int max_word_edits = 3;
  int max_char_edits = 3;
  int pso_particles = 10;
  int pso_iterations = 10;
  std::uint64_t seed = 1;
};

struct AttackCandidate {
  std::string original_id;
  int method_id = 0;
  int model_node_id = 0;
  int model_depth = 0;
  std::string adv_text;
  std::vector<std::string> adv_tokens;
  double prob_drop = 0.0;    // p_yhat(original) - p_yhat(adv) on the source model
  double similarity = 0.0;   // cosine over the configured embedder
  bool flipped_on_substitute = false;
  int word_edits = 0;
  int char_edits = 0;
};

/// Same-text token co-occurrence statistics over the victim corpus; the
/// proposal distribution behind masked_replace. Association is scored by
/// positive PMI rather than raw counts, so ubiquitous function words do not
/// drown out the tokens that actually characterize a context.
class CooccurrenceTable {
 public:
  void fit(const std::vector<TokenizedText>& corpus) {
    counts_.clear();
    row_sums_.clear();
    total_ = 0;
    for (const auto& doc : corpus) {
      for (std::size_t i = 0; i < doc.tokens.size(); ++i)
        for (std::size_t j = 0; j < doc.tokens.size(); ++j)
          if (i != j) {
            counts_[doc.tokens[i]][doc.tokens[j]] += 1;
            row_sums_[doc.tokens[i]] += 1;
            ++total_;
          }
    }
  }

  bool empty() const { return counts_.empty(); }

  double ppmi(const std::string& a, const std::string& b) const {
    auto row = counts_.find(a);
    if (row == counts_.end()) return 0.0;
    auto it = row->second.find(b);
    if (it == row->second.end()) return 0.0;
    double joint = static_cast<double>(it->second);
    double pa = static_cast<double>(row_sums_.at(a));
    double pb = static_cast<double>(row_sums_.at(b));
    double pmi = std::log(joint * static_cast<double>(total_) / (pa * pb));
    return pmi > 0.0 ? pmi : 0.0;
  }

  /// Top-c candidate fillers by summed positive PMI with the context
  /// tokens, ties broken lexicographically. The excluded token never
  /// appears in the result.
  std::vector<std::string> top_fillers(const std::vector<std::string>& context,
                                       const std::string& exclude, std::size_t c) const {
    std::map<std::string, double> scores;
    for (const auto& ctx_tok : context) {
      auto it = counts_.find(ctx_tok);
      if (it == counts_.end()) continue;
      for (const auto& [candidate, count] : it->second) {
        if (candidate == exclude) continue;
        double a = ppmi(candidate, ctx_tok);
        if (a > 0.0) scores[candidate] += a;
      }
    }
    std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (ranked.size() > c) ranked.resize(c);
    std::vector<std::string> out;
    out.reserve(ranked.size());
    for (auto& [tok, score] : ranked) out.push_back(tok);
    return out;
  }

 private:
  std::unordered_map<std::string, std::unordered_map<std::string, long>> counts_;
  std::unordered_map<std::string, long> row_sums_;
  long long total_ = 0;
};

/// One victim text with its tokenization; engines need both the string (for
/// byte splicing) and the token view.
struct AttackInput {
  std::string text;
  TokenizedText tokens;
};

inline AttackInput make_attack_input(const TextRecord& record) {
  return AttackInput{record.text, tokenize(record)};
}

struct AttackContext {
  const ClassifierParams* model = nullptr;
  const Embedder* embedder = nullptr;
  const Lexicon* lexicon = nullptr;
  const CooccurrenceTable* cooc = nullptr;
  AttackBudget budget;
};

namespace detail {

// Current perturbed state: string plus tokenization, kept in sync by
// re-tokenizing after every splice.
struct WorkingText {
  std::string text;
  TokenizedText toks;

  static std::optional<WorkingText> make(const std::string& record_id, std::string text) {
    WorkingText wt;
    wt.text = std::move(text);
    try {
      wt.toks = tokenize(record_id, wt.text);
    } catch (const std::invalid_argument&) {
      return std::nullopt;  // edit destroyed every token
    }
    return wt;
  }

  std::optional<WorkingText> with_span_replaced(std::size_t begin, std::size_t end,
                                                const std::string& bytes) const {
    std::string next = text;
    next.replace(begin, end - begin, bytes);
    return make(toks.record_id, std::move(next));
  }

  std::optional<WorkingText> with_token_replaced(std::size_t position,
                                                 const std::string& replacement) const {
    auto [b, e] = toks.spans[position];
    return with_span_replaced(b, e, replacement);
  }
};

// Shared per-engine state: the substitute's view of the original text.
struct EngineRun {
  const AttackContext* ctx;
  const AttackInput* input;
  EmbeddingVector original_embedding;
  int y_hat = 0;
  double p0 = 0.0;

  static std::optional<EngineRun> make(const AttackInput& input, const AttackContext& ctx) {
    EngineRun run;
    run.ctx = &ctx;
    run.input = &input;
    run.original_embedding = ctx.embedder->embed(input.tokens);
    if (run.original_embedding.all_zero()) return std::nullopt;  // no purchase on the model
    auto pred = predict(*ctx.model, run.original_embedding);
    run.y_hat = pred.predicted;
    run.p0 = pred.probs[static_cast<std::size_t>(run.y_hat)];
    return run;
  }

  double prob_of(const TokenizedText& toks) const {
    auto emb = ctx->embedder->embed(toks);
    return predict(*ctx->model, emb).probs[static_cast<std::size_t>(y_hat)];
  }

  bool flips(const TokenizedText& toks) const {
    auto emb = ctx->embedder->embed(toks);
    return predict(*ctx->model, emb).predicted != y_hat;
  }

  // Salience of each token position: |gradient . (contribution of that
  // token to the embedding)|, with the contribution measured by deletion.
  std::vector<double> saliency(const WorkingText& wt) const {
    EmbeddingVector here = ctx->embedder->embed(wt.toks);
    std::vector<double> grad = input_gradient(*ctx->model, here, y_hat);
    std::vector<double> out(wt.toks.tokens.size(), 0.0);
    for (std::size_t i = 0; i < wt.toks.tokens.size(); ++i) {
      TokenizedText without = wt.toks;
      without.tokens.erase(without.tokens.begin() + static_cast<long>(i));
      without.spans.erase(without.spans.begin() + static_cast<long>(i));
      EmbeddingVector reduced = ctx->embedder->embed(without);
      double dot = 0.0;
      for (std::size_t d = 0; d < here.values.size(); ++d)
        dot += grad[d] * (here.values[d] - reduced.values[d]);
      out[i] = std::abs(dot);
    }
    return out;
  }

  std::optional<AttackCandidate> finalize(const WorkingText& wt, int word_edits,
                                          int char_edits) const {
    if (wt.text == input->text) return std::nullopt;
    AttackCandidate cand;
    cand.original_id = input->tokens.record_id;
    cand.adv_text = wt.text;
    cand.adv_tokens = wt.toks.tokens;
    EmbeddingVector adv = ctx->embedder->embed(wt.toks);
    auto pred = predict(*ctx->model, adv);
    cand.prob_drop = p0 - pred.probs[static_cast<std::size_t>(y_hat)];
    cand.flipped_on_substitute = pred.predicted != y_hat;
    cand.similarity = cosine_similarity(original_embedding, adv);
    cand.word_edits = word_edits;
    cand.char_edits = char_edits;
    return cand;
  }
};

inline std::size_t cp_length(const std::string& token) {
  std::size_t n = 0, i = 0;
  while (i < token.size()) {
    i += decode_utf8(token, i).length;
    ++n;
  }
  return n;
}

}  // namespace detail

/// Hotflip-style engine: per round, every (unvisited position, synonym)
/// replacement is scored exactly by a forward pass and the largest
/// probability drop wins; gradient salience orders the tie-breaks. Stops on
/// a substitute flip, an exhausted budget, or no improving edit.
inline std::optional<AttackCandidate> attack_grad_flip(const AttackInput& input,
                                                       const AttackContext& ctx) {
  if (ctx.budget.max_word_edits <= 0) return std::nullopt;
  auto run = detail::EngineRun::make(input, ctx);
  if (!run) return std::nullopt;
  auto wt = detail::WorkingText{input.text, input.tokens};

  std::set<std::size_t> visited;
  int edits = 0;
  double p_current = run->p0;
  while (edits < ctx.budget.max_word_edits) {
    auto saliency = run->saliency(wt);
    struct Choice {
      double drop;
      double saliency;
      std::size_t position;
      std::string synonym;
      detail::WorkingText variant;
      double p_after;
    };
    std::optional<Choice> best;
    for (std::size_t i = 0; i < wt.toks.tokens.size(); ++i) {
      if (visited.count(i)) continue;
      const auto& syns = ctx.lexicon->synonyms_for(wt.toks.tokens[i]);
      for (const auto& syn : syns) {
        auto variant = wt.with_token_replaced(i, syn);
        if (!variant) continue;
        double p = run->prob_of(variant->toks);
        Choice c{p_current - p, saliency[i], i, syn, std::move(*variant), p};
        bool better = !best || c.drop > best->drop ||
                      (c.drop == best->drop &&
                       (c.saliency > best->saliency ||
                        (c.saliency == best->saliency &&
                         (c.position < best->position ||
                          (c.position == best->position && c.synonym < best->synonym)))));
        if (better) best = std::move(c);
      }
    }
    if (!best) break;
    if (edits > 0 && best->drop <= 0.0) break;
    wt = std::move(best->variant);
    p_current = best->p_after;
    visited.insert(best->position);
    ++edits;
    if (run->flips(wt.toks)) break;
  }
  if (edits == 0) return std::nullopt;
  auto cand = run->finalize(wt, edits, 0);
  if (cand) cand->method_id = static_cast<int>(AttackMethod::grad_flip);
  return cand;
}

/// FD-style engine: one gradient per round; replacements are ranked by the
/// first-order score grad . (e(variant) - e(current)) instead of forward
/// passes. A saturated (zero-gradient) round falls back to the
/// lexicographically first synonym of the longest eligible word.
inline std::optional<AttackCandidate> attack_grad_synonym(const AttackInput& input,
                                                          const AttackContext& ctx) {
  if (ctx.budget.max_word_edits <= 0) return std::nullopt;
  auto run = detail::EngineRun::make(input, ctx);
  if (!run) return std::nullopt;
  auto wt = detail::WorkingText{input.text, input.tokens};

  std::set<std::size_t> visited;
  int edits = 0;
  while (edits < ctx.budget.max_word_edits) {
    EmbeddingVector here = ctx.embedder->embed(wt.toks);
    std::vector<double> grad = input_gradient(*ctx.model, here, run->y_hat);

    struct Choice {
      double score;
      std::size_t position;
      std::string synonym;
    };
    std::optional<Choice> best;
    double max_abs_score = 0.0;
    bool any_pair = false;
    for (std::size_t i = 0; i < wt.toks.tokens.size(); ++i) {
      if (visited.count(i)) continue;
      const auto& syns = ctx.lexicon->synonyms_for(wt.toks.tokens[i]);
      for (const auto& syn : syns) {
        any_pair = true;
        TokenizedText replaced = wt.toks;
        replaced.tokens[i] = syn;
        EmbeddingVector moved = ctx.embedder->embed(replaced);
        double score = 0.0;
        for (std::size_t d = 0; d < here.values.size(); ++d)
          score += grad[d] * (moved.values[d] - here.values[d]);
        max_abs_score = std::max(max_abs_score, std::abs(score));
        Choice c{score, i, syn};
        bool better = !best || c.score > best->score ||
                      (c.score == best->score &&
                       (c.position < best->position ||
                        (c.position == best->position && c.synonym < best->synonym)));
        if (better) best = c;
      }
    }
    if (!any_pair) break;
    if (max_abs_score <= 1e-15) {
      if (edits > 0) break;
      // Saturated from the start: emit one best-attempt edit, the
      // lexicographically first synonym of the longest eligible word.
      std::optional<std::size_t> pick;
      std::size_t pick_len = 0;
      for (std::size_t i = 0; i < wt.toks.tokens.size(); ++i) {
        if (visited.count(i) || ctx.lexicon->synonyms_for(wt.toks.tokens[i]).empty()) continue;
        std::size_t len = detail::cp_length(wt.toks.tokens[i]);
        if (!pick || len > pick_len) {
          pick = i;
          pick_len = len;
        }
      }
      if (!pick) break;
      auto syns = ctx.lexicon->synonyms_for(wt.toks.tokens[*pick]);
      best = Choice{0.0, *pick, *std::min_element(syns.begin(), syns.end())};
    } else if (edits > 0 && best->score <= 0.0) {
      break;
    }
    auto variant = wt.with_token_replaced(best->position, best->synonym);
    if (!variant) break;
    wt = std::move(*variant);
    visited.insert(best->position);
    ++edits;
    if (run->flips(wt.toks)) break;
  }
  if (edits == 0) return std::nullopt;
  auto cand = run->finalize(wt, edits, 0);
  if (cand) cand->method_id = static_cast<int>(AttackMethod::grad_synonym);
  return cand;
}

namespace detail {

// The fixed, versioned homoglyph table. Order matters: enumeration is part
// of the engine's deterministic behavior.
inline const std::vector<std::pair<char32_t, char32_t>>& homoglyph_table() {
  static const std::vector<std::pair<char32_t, char32_t>> table = {
      {U'o', U'0'}, {U'l', U'1'}, {U'a', U'@'}, {U'e', U'3'}, {U'i', U'!'}, {U's', U'$'},
  };
  return table;
}

// Candidate character operations for one word, in enumeration order:
// adjacent interior swaps, interior deletions, interior duplications, then
// one homoglyph substitution per table entry at its first occurrence.
// Variants identical to the original word are dropped, duplicates keep
// their first position.
inline std::vector<std::string> charbug_ops(const std::string& word) {
  std::vector<char32_t> cps;
  std::size_t i = 0;
  while (i < word.size()) {
    auto [cp, len] = decode_utf8(word, i);
    cps.push_back(cp);
    i += len;
  }
  const std::size_t L = cps.size();
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto emit = [&](const std::vector<char32_t>& chars) {
    std::string s;
    for (char32_t c : chars) encode_utf8(c, s);
    if (s != word && seen.insert(s).second) out.push_back(s);
  };
  if (L >= 4) {
    for (std::size_t p = 1; p + 2 < L; ++p) {
      auto v = cps;
      std::swap(v[p], v[p + 1]);
      emit(v);
    }
  }
  if (L >= 3) {
    for (std::size_t p = 1; p + 1 < L; ++p) {
      auto v = cps;
      v.erase(v.begin() + static_cast<long>(p));
      emit(v);
    }
    for (std::size_t p = 1; p + 1 < L; ++p) {
      auto v = cps;
      v.insert(v.begin() + static_cast<long>(p), cps[p]);
      emit(v);
    }
  }
  if (L >= 2) {
    for (const auto& [from, to] : homoglyph_table()) {
      for (std::size_t p = 0; p < L; ++p) {
        if (cps[p] == from) {  // first occurrence only
          auto v = cps;
          v[p] = to;
          emit(v);
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// TextBugger-style engine: greedy over exact probability drop across every
/// enumerated character operation on every current token, one edit per
/// round up to max_char_edits.
inline std::optional<AttackCandidate> attack_charbug(const AttackInput& input,
                                                     const AttackContext& ctx) {
  if (ctx.budget.max_char_edits <= 0) return std::nullopt;
  auto run = detail::EngineRun::make(input, ctx);
  if (!run) return std::nullopt;
  auto wt = detail::WorkingText{input.text, input.tokens};

  int edits = 0;
  double p_current = run->p0;
  while (edits < ctx.budget.max_char_edits) {
    struct Choice {
      double drop;
      std::size_t position;
      std::size_t op_index;
      detail::WorkingText variant;
      double p_after;
    };
    std::optional<Choice> best;
    for (std::size_t i = 0; i < wt.toks.tokens.size(); ++i) {
      if (detail::cp_length(wt.toks.tokens[i]) < 2) continue;
      auto ops = detail::charbug_ops(wt.toks.tokens[i]);
      for (std::size_t k = 0; k < ops.size(); ++k) {
        auto variant = wt.with_token_replaced(i, ops[k]);
        if (!variant) continue;
        double p = run->prob_of(variant->toks);
        Choice c{p_current - p, i, k, std::move(*variant), p};
        bool better = !best || c.drop > best->drop ||
                      (c.drop == best->drop &&
                       (c.position < best->position ||
                        (c.position == best->position && c.op_index < best->op_index)));
        if (better) best = std::move(c);
      }
    }
    if (!best) break;
    if (edits > 0 && best->drop <= 0.0) break;
    wt = std::move(best->variant);
    p_current = best->p_after;
    ++edits;
    if (run->flips(wt.toks)) break;
  }
  if (edits == 0) return std::nullopt;
  auto cand = run->finalize(wt, 0, edits);
  if (cand) cand->method_id = static_cast<int>(AttackMethod::charbug);
  return cand;
}

namespace detail {

struct PsoState {
  std::vector<std::size_t> positions;             // token indices with synonyms
  std::vector<std::vector<std::string>> options;  // synonyms per position
};

// Applies a (position -> choice) assignment to the original text; choice 0
// keeps the token, choice k substitutes the k-th synonym.
inline std::optional<WorkingText> realize_assignment(const AttackInput& input,
                                                     const PsoState& state,
                                                     const std::vector<int>& assignment) {
  std::string text = input.text;
  for (std::size_t idx = state.positions.size(); idx-- > 0;) {
    int choice = assignment[idx];
    if (choice == 0) continue;
    auto [b, e] = input.tokens.spans[state.positions[idx]];
    text.replace(b, e - b, state.options[idx][static_cast<std::size_t>(choice - 1)]);
  }
  return WorkingText::make(input.tokens.record_id, std::move(text));
}

inline int assignment_edits(const std::vector<int>& assignment) {
  int n = 0;
  for (int c : assignment)
    if (c != 0) ++n;
  return n;
}

}  // namespace detail

/// SememePSO-style engine: particles are synonym assignments over the
/// replaceable positions; fitness is the exact probability drop. Velocities
/// follow v <- w*v + c1*r1*(pbest - x) + c2*r2*(gbest - x) with w = 0.8 and
/// c1 = c2 = 2.0, and a position re-samples to the global best with
/// probability sigmoid(v). When the whole assignment space is no larger
/// than the swarm, initialization enumerates it outright. The returned
/// assignment is repaired to the word budget by reverting the
/// lowest-contribution edits.
inline std::optional<AttackCandidate> attack_pso(const AttackInput& input,
                                                 const AttackContext& ctx) {
  if (ctx.budget.max_word_edits <= 0 || ctx.budget.pso_particles <= 0) return std::nullopt;
  auto run = detail::EngineRun::make(input, ctx);
  if (!run) return std::nullopt;

  detail::PsoState state;
  for (std::size_t i = 0; i < input.tokens.tokens.size(); ++i) {
    const auto& syns = ctx.lexicon->synonyms_for(input.tokens.tokens[i]);
    if (!syns.empty()) {
      state.positions.push_back(i);
      state.options.push_back(syns);
    }
  }
  if (state.positions.empty()) return std::nullopt;
  const std::size_t n_pos = state.positions.size();

  double space = 1.0;
  for (const auto& opts : state.options) space *= static_cast<double>(opts.size() + 1);
  const auto n_particles = static_cast<std::size_t>(ctx.budget.pso_particles);

  Rng rng(derive_seed(ctx.budget.seed, 0x9507ULL));
  std::vector<std::vector<int>> particles;
  if (space <= static_cast<double>(n_particles)) {
    // Exhaustive initialization: the search space fits inside the swarm.
    std::vector<int> cursor(n_pos, 0);
    for (;;) {
      particles.push_back(cursor);
      std::size_t idx = 0;
      while (idx < n_pos) {
        if (++cursor[idx] <= static_cast<int>(state.options[idx].size())) break;
        cursor[idx] = 0;
        ++idx;
      }
      if (idx == n_pos) break;
    }
  } else {
    for (std::size_t p = 0; p < n_particles; ++p) {
      std::vector<int> x(n_pos, 0);
      for (std::size_t i = 0; i < n_pos; ++i) {
        if (rng_u01(rng) < 0.5)
          x[i] = 1 + static_cast<int>(rng_below(rng, state.options[i].size()));
      }
      particles.push_back(std::move(x));
    }
  }

  auto fitness = [&](const std::vector<int>& assignment) -> double {
    auto wt = detail::realize_assignment(input, state, assignment);
    if (!wt) return -std::numeric_limits<double>::infinity();
    return run->p0 - run->prob_of(wt->toks);
  };

  std::vector<double> particle_fit(particles.size());
  std::vector<std::vector<int>> pbest = particles;
  std::vector<double> pbest_fit(particles.size());
  std::vector<int> gbest;
  double gbest_fit = -std::numeric_limits<double>::infinity();
  std::vector<int> best_edit;  // best non-identity assignment seen
  double best_edit_fit = -std::numeric_limits<double>::infinity();

  auto consider = [&](const std::vector<int>& x, double f) {
    if (f > gbest_fit) {
      gbest = x;
      gbest_fit = f;
    }
    if (detail::assignment_edits(x) > 0 && f > best_edit_fit) {
      best_edit = x;
      best_edit_fit = f;
    }
  };

  for (std::size_t p = 0; p < particles.size(); ++p) {
    particle_fit[p] = fitness(particles[p]);
    pbest_fit[p] = particle_fit[p];
    consider(particles[p], particle_fit[p]);
  }

  const double omega = 0.8, c1 = 2.0, c2 = 2.0;
  std::vector<std::vector<double>> velocity(particles.size(), std::vector<double>(n_pos, 0.0));
  for (int iter = 0; iter < ctx.budget.pso_iterations; ++iter) {
    for (std::size_t p = 0; p < particles.size(); ++p) {
      for (std::size_t i = 0; i < n_pos; ++i) {
        double r1 = rng_u01(rng), r2 = rng_u01(rng);
        velocity[p][i] = omega * velocity[p][i] +
                         c1 * r1 * static_cast<double>(pbest[p][i] - particles[p][i]) +
                         c2 * r2 * static_cast<double>(gbest[i] - particles[p][i]);
        double gate = 1.0 / (1.0 + std::exp(-velocity[p][i]));
        if (rng_u01(rng) < gate) particles[p][i] = gbest[i];
      }
      double f = fitness(particles[p]);
      particle_fit[p] = f;
      if (f > pbest_fit[p]) {
        pbest[p] = particles[p];
        pbest_fit[p] = f;
      }
      consider(particles[p], f);
    }
  }

  if (best_edit.empty()) return std::nullopt;

  // Budget repair: revert the cheapest edits until within max_word_edits.
  std::vector<int> chosen = best_edit;
  while (detail::assignment_edits(chosen) > ctx.budget.max_word_edits) {
    double base = fitness(chosen);
    std::optional<std::size_t> cheapest;
    double cheapest_cost = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_pos; ++i) {
      if (chosen[i] == 0) continue;
      auto reverted = chosen;
      reverted[i] = 0;
      double cost = base - fitness(reverted);
      if (cost < cheapest_cost) {
        cheapest_cost = cost;
        cheapest = i;
      }
    }
    chosen[*cheapest] = 0;
  }
  if (detail::assignment_edits(chosen) == 0) return std::nullopt;

  auto wt = detail::realize_assignment(input, state, chosen);
  if (!wt) return std::nullopt;
  auto cand = run->finalize(*wt, detail::assignment_edits(chosen), 0);
  if (cand) cand->method_id = static_cast<int>(AttackMethod::pso);
  return cand;
}

/// BAE-style surrogate: positions are visited in gradient-salience order and
/// filled with the corpus's top co-occurrence proposals (c = 10), subject to
/// a 0.80 full-text cosine pre-check; among surviving fillers the largest
/// exact probability drop wins. If no visited position improves, the single
/// best edit seen is emitted as the engine's attempt.
inline std::optional<AttackCandidate> attack_masked_replace(const AttackInput& input,
                                                            const AttackContext& ctx) {
  if (!ctx.cooc) throw std::invalid_argument("masked_replace: co-occurrence table required");
  if (ctx.budget.max_word_edits <= 0) return std::nullopt;
  if (ctx.cooc->empty()) return std::nullopt;
  auto run = detail::EngineRun::make(input, ctx);
  if (!run) return std::nullopt;
  auto wt = detail::WorkingText{input.text, input.tokens};

  constexpr std::size_t kTopFillers = 10;
  constexpr double kSimPrecheck = 0.80;

  auto saliency = run->saliency(wt);
  std::vector<std::size_t> order(wt.toks.tokens.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (saliency[a] != saliency[b]) return saliency[a] > saliency[b];
    return a < b;
  });

  struct Choice {
    double drop;
    detail::WorkingText variant;
    double p_after;
  };
  std::optional<Choice> best_single;  // fallback if no position improves
  int edits = 0;
  double p_current = run->p0;
  bool flipped = false;
  for (std::size_t pos : order) {
    if (edits >= ctx.budget.max_word_edits || flipped) break;
    if (pos >= wt.toks.tokens.size()) continue;  // token count changed
    const std::string& original_token = wt.toks.tokens[pos];
    std::vector<std::string> context;
    for (std::size_t i = 0; i < wt.toks.tokens.size(); ++i)
      if (i != pos) context.push_back(wt.toks.tokens[i]);
    auto fillers = ctx.cooc->top_fillers(context, original_token, kTopFillers);

    std::optional<Choice> best_here;
    for (const auto& filler : fillers) {
      if (filler == original_token) continue;
      auto variant = wt.with_token_replaced(pos, filler);
      if (!variant) continue;
      EmbeddingVector adv = ctx.embedder->embed(variant->toks);
      if (cosine_similarity(run->original_embedding, adv) < kSimPrecheck) continue;
      double p = run->prob_of(variant->toks);
      double drop = p_current - p;
      if (!best_here || drop > best_here->drop)
        best_here = Choice{drop, std::move(*variant), p};
    }
    if (!best_here) continue;  // position skipped (no filler survived)
    if (edits == 0 && (!best_single || best_here->drop > best_single->drop))
      best_single = best_here;
    if (best_here->drop <= 0.0) continue;
    wt = best_here->variant;
    p_current = best_here->p_after;
    ++edits;
    flipped = run->flips(wt.toks);
  }

  if (edits == 0) {
    if (!best_single) return std::nullopt;
    wt = best_single->variant;
    edits = 1;
  }
  auto cand = run->finalize(wt, edits, 0);
  if (cand) cand->method_id = static_cast<int>(AttackMethod::masked_replace);
  return cand;
}

inline std::optional<AttackCandidate> run_attack(AttackMethod method, const AttackInput& input,
                                                 const AttackContext& ctx) {
  switch (method) {
    case AttackMethod::grad_flip: return attack_grad_flip(input, ctx);
    case AttackMethod::grad_synonym: return attack_grad_synonym(input, ctx);
    case AttackMethod::charbug: return attack_charbug(input, ctx);
    case AttackMethod::pso: return attack_pso(input, ctx);
    case AttackMethod::masked_replace: return attack_masked_replace(input, ctx);
  }
  throw std::logic_error("unreachable");
}

struct ModelPoolEntry {
  int node_id = 0;
  int depth = 0;
  const ClassifierParams* params = nullptr;
};

/// Runs every (method, model) pair and collects the successful candidates;
/// at most |methods| * |pool| come back. Per-pair seeds derive from the
/// method and node ids alone, so a method's candidates do not depend on
/// which other methods run beside it.
inline std::vector<AttackCandidate> generate_candidates(
    const AttackInput& input, const std::vector<ModelPoolEntry>& pool,
    const std::vector<AttackMethod>& methods, const Embedder& embedder,
    const Lexicon& lexicon, const CooccurrenceTable* cooc, const AttackBudget& budget) {
  if (methods.empty()) throw std::invalid_argument("generate_candidates: empty method list");
  if (pool.empty()) throw std::invalid_argument("generate_candidates: empty model pool");
  std::vector<AttackCandidate> out;
  for (const auto& method : methods) {
    for (const auto& entry : pool) {
      AttackContext ctx;
      ctx.model = entry.params;
      ctx.embedder = &embedder;
      ctx.lexicon = &lexicon;
      ctx.cooc = cooc;
      ctx.budget = budget;
      ctx.budget.seed = derive_seed(budget.seed, static_cast<std::uint64_t>(method),
                                    static_cast<std::uint64_t>(entry.node_id));
      auto cand = run_attack(method, input, ctx);
      if (!cand) continue;
      cand->model_node_id = entry.node_id;
      cand->model_depth = entry.depth;
      out.push_back(std::move(*cand));
    }
  }
  return out;
}

}  // namespace shade
