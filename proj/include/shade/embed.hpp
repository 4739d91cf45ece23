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
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "shade/common.hpp"
#include "shade/corpus.hpp"

namespace shade {

/// Fixed-dimension text representation plus the id of the embedder that
/// produced it. Vectors from different embedders never mix.
struct EmbeddingVector {
  std::vector<double> values;
  std::string embedder_id;

  std::size_t dim() const { return values.size(); }
  bool all_zero() const {
    for (double v : values)
      if (v != 0.0) return false;
    return true;
  }
};

/// Token inventory with document frequencies, fitted over a tokenized
/// corpus. Token order is lexicographic, indices are dense 0..V-1.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::vector<int> doc_freq,
             std::size_t documents_fitted)
      : tokens_(std::move(tokens)),
        doc_freq_(std::move(doc_freq)),
        documents_fitted_(documents_fitted) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = i;
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t documents_fitted() const { return documents_fitted_; }

  // -1 when out of vocabulary.
  long index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : static_cast<long>(it->second);
  }

  int doc_freq(std::size_t index) const { return doc_freq_.at(index); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<int> doc_freq_;
  std::size_t documents_fitted_ = 0;
};

/// Keeps tokens whose total corpus count reaches min_count, truncated to the
/// max_size most frequent (ties lexicographic). Final token order is
/// lexicographic. Throws when nothing survives.
inline Vocabulary fit_vocabulary(const std::vector<TokenizedText>& corpus,
                                 int min_count = 1,
                                 std::size_t max_size = 1u << 20) {
  if (corpus.empty()) throw std::invalid_argument("fit_vocabulary: empty corpus");
  std::map<std::string, std::pair<long, int>> stats;  // token -> (count, df)
  for (const auto& doc : corpus) {
    std::map<std::string, int> in_doc;
    for (const auto& t : doc.tokens) in_doc[t]++;
    for (const auto& [t, c] : in_doc) {
      auto& s = stats[t];
      s.first += c;
      s.second += 1;
    }
  }
  std::vector<std::pair<std::string, std::pair<long, int>>> kept;
  for (const auto& [t, s] : stats)
    if (s.first >= min_count) kept.emplace_back(t, s);
  if (kept.empty()) throw std::invalid_argument("empty vocabulary");
  if (kept.size() > max_size) {
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      if (a.second.first != b.second.first) return a.second.first > b.second.first;
      return a.first < b.first;
    });
    kept.resize(max_size);
  }
  std::sort(kept.begin(), kept.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> tokens;
  std::vector<int> df;
  tokens.reserve(kept.size());
  df.reserve(kept.size());
  for (auto& [t, s] : kept) {
    tokens.push_back(t);
    df.push_back(s.second);
  }
  return Vocabulary(std::move(tokens), std::move(df), corpus.size());
}

/// Multi-hot bag of words: entry v is 1 iff token v occurs. Out-of-vocabulary
/// tokens are ignored (an adversarial character edit that knocks a token out
/// of the vocabulary loses exactly that token's coordinate).
inline EmbeddingVector embed_onehot(const TokenizedText& text, const Vocabulary& vocab) {
  EmbeddingVector v;
  v.embedder_id = "onehot";
  v.values.assign(vocab.size(), 0.0);
  for (const auto& t : text.tokens) {
    long idx = vocab.index_of(t);
    if (idx >= 0) v.values[static_cast<std::size_t>(idx)] = 1.0;
  }
  return v;
}

/// tf-idf with smoothed idf = ln((1+N)/(1+df)) + 1, L2-normalized unless the
/// vector is all-zero. When the vocabulary carries no document statistics
/// the weight falls back to the raw term frequency.
inline EmbeddingVector embed_tfidf(const TokenizedText& text, const Vocabulary& vocab) {
  EmbeddingVector v;
  v.embedder_id = "tfidf";
  v.values.assign(vocab.size(), 0.0);
  for (const auto& t : text.tokens) {
    long idx = vocab.index_of(t);
    if (idx >= 0) v.values[static_cast<std::size_t>(idx)] += 1.0;
  }
  const auto n_docs = static_cast<double>(vocab.documents_fitted());
  if (n_docs > 0) {
    for (std::size_t i = 0; i < v.values.size(); ++i) {
      if (v.values[i] == 0.0) continue;
      double idf = std::log((1.0 + n_docs) / (1.0 + vocab.doc_freq(i))) + 1.0;
      v.values[i] *= idf;
    }
  }
  double norm = 0.0;
  for (double x : v.values) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v.values) x /= norm;
  }
  return v;
}

/// Vocabulary-free signed feature hashing: bucket and sign come from two
/// independent seeded hashes per token; the vector accumulates signed counts.
inline EmbeddingVector embed_hashed(const TokenizedText& text, std::size_t dim,
                                    std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("embed_hashed: dim must be >= 2");
  EmbeddingVector v;
  v.embedder_id = "hashed";
  v.values.assign(dim, 0.0);
  for (const auto& t : text.tokens) {
    std::uint64_t h_bucket = fnv1a64(t, derive_seed(seed, 0x5eedb00cULL));
    std::uint64_t h_sign = fnv1a64(t, derive_seed(seed, 0x51671f00ULL));
    std::size_t bucket = static_cast<std::size_t>(h_bucket % dim);
    double sign = (h_sign & 1) ? 1.0 : -1.0;
    v.values[bucket] += sign;
  }
  return v;
}

/// dot(a,b)/(|a||b|), 0 when either norm vanishes (degenerate flag set).
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b,
                                bool* degenerate = nullptr) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  if (a.embedder_id != b.embedder_id)
    throw std::invalid_argument("cosine_similarity: embedder mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (degenerate) *degenerate = false;
  if (na == 0.0 || nb == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

/// The f_e used for clustering, attack-time similarity, and the reported
/// similarity metric (one embedder plays all three roles).
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(const TokenizedText& text) const = 0;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
};

class OneHotEmbedder final : public Embedder {
 public:
  explicit OneHotEmbedder(Vocabulary vocab) : vocab_(std::move(vocab)) {}
  EmbeddingVector embed(const TokenizedText& text) const override {
    return embed_onehot(text, vocab_);
  }
  std::string id() const override { return "onehot"; }
  std::size_t dim() const override { return vocab_.size(); }
  const Vocabulary& vocabulary() const { return vocab_; }

 private:
  Vocabulary vocab_;
};

class TfidfEmbedder final : public Embedder {
 public:
  explicit TfidfEmbedder(Vocabulary vocab) : vocab_(std::move(vocab)) {}
  EmbeddingVector embed(const TokenizedText& text) const override {
    return embed_tfidf(text, vocab_);
  }
  std::string id() const override { return "tfidf"; }
  std::size_t dim() const override { return vocab_.size(); }
  const Vocabulary& vocabulary() const { return vocab_; }

 private:
  Vocabulary vocab_;
};

class HashedEmbedder final : public Embedder {
 public:
  HashedEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim < 2) throw std::invalid_argument("HashedEmbedder: dim must be >= 2");
  }
  EmbeddingVector embed(const TokenizedText& text) const override {
    return embed_hashed(text, dim_, seed_);
  }
  std::string id() const override { return "hashed"; }
  std::size_t dim() const override { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Externally produced vectors keyed by record id (TSV ingestion below).
/// Usable for clustering and substitute training; attack engines need an
/// embedder that can embed perturbed text, which this one cannot.
class PrecomputedEmbedder final : public Embedder {
 public:
  explicit PrecomputedEmbedder(std::unordered_map<std::string, std::vector<double>> vectors)
      : vectors_(std::move(vectors)) {
    if (vectors_.empty())
      throw std::invalid_argument("PrecomputedEmbedder: no vectors");
    dim_ = vectors_.begin()->second.size();
    for (const auto& [id, v] : vectors_)
      if (v.size() != dim_)
        throw std::invalid_argument("PrecomputedEmbedder: inconsistent dimensions");
  }
  EmbeddingVector embed(const TokenizedText& text) const override {
    auto it = vectors_.find(text.record_id);
    if (it == vectors_.end())
      throw std::runtime_error("no precomputed vector for record \"" + text.record_id + "\"");
    return EmbeddingVector{it->second, id()};
  }
  std::string id() const override { return "precomputed"; }
  std::size_t dim() const override { return dim_; }

 private:
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::size_t dim_ = 0;
};

/// Vector file format: `id<TAB>v1,v2,...,vd` per line.
inline std::unordered_map<std::string, std::vector<double>> load_precomputed_vectors(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vector file: " + path);
  std::unordered_map<std::string, std::vector<double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw std::runtime_error("malformed vector line at line " + std::to_string(line_no));
    std::vector<double> values;
    std::stringstream rest(line.substr(tab + 1));
    std::string field;
    while (std::getline(rest, field, ',')) {
      try {
        values.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw std::runtime_error("malformed vector line at line " + std::to_string(line_no));
      }
    }
    if (values.empty())
      throw std::runtime_error("malformed vector line at line " + std::to_string(line_no));
    out[line.substr(0, tab)] = std::move(values);
  }
  return out;
}

}  // namespace shade
