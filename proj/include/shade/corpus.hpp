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
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "shade/common.hpp"

namespace shade {

/// One input text. `label` is only ever read by the evaluation harness;
/// attack-side code treats every record as unlabeled.
struct TextRecord {
  std::string id;
  std::string text;
  std::optional<int> label;
};

/// Word-level view of a record. Spans are byte ranges into the original
/// text, non-overlapping and strictly increasing, so the original string
/// can be re-assembled around token replacements byte-for-byte.
struct TokenizedText {
  std::string record_id;
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // [begin, end)
};

namespace detail {

struct DecodedChar {
  char32_t cp;
  std::size_t length;  // bytes consumed
};

// Lenient UTF-8 decode: malformed bytes fall back to single-byte
// codepoints so tokenization stays total and spans stay byte-accurate.
inline DecodedChar decode_utf8(std::string_view s, std::size_t i) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    char32_t cp = (b0 & 0x1F) << 6 | (static_cast<unsigned char>(s[i + 1]) & 0x3F);
    return {cp, 2};
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    char32_t cp = (b0 & 0x0F) << 12 |
                  (static_cast<unsigned char>(s[i + 1]) & 0x3F) << 6 |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3F);
    return {cp, 3};
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (b0 & 0x07) << 18 |
                  (static_cast<unsigned char>(s[i + 1]) & 0x3F) << 12 |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3F) << 6 |
                  (static_cast<unsigned char>(s[i + 3]) & 0x3F);
    return {cp, 4};
  }
  return {b0, 1};
}

inline void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Word characters: ASCII alphanumerics, plus non-ASCII scalars outside the
// common punctuation blocks. A full Unicode category table buys little at
// this scale; the blocks below cover the punctuation seen in ordinary text.
inline bool is_word_codepoint(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
           (cp >= 'A' && cp <= 'Z');
  }
  if (cp >= 0x00A0 && cp <= 0x00BF) return false;  // Latin-1 punctuation
  if (cp == 0x00D7 || cp == 0x00F7) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE50 && cp <= 0xFE6F) return false;  // small form variants
  if (cp >= 0xFF01 && cp <= 0xFF0F) return false;  // fullwidth punctuation
  return true;
}

inline char32_t to_lower_cp(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  return cp;
}

inline std::string trim_ascii(std::string_view s) {
  std::size_t b = 0, e = s.size();
  auto is_space = [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

/// Lowercases a single token the same way the tokenizer does (ASCII case
/// folding; other scalars pass through).
inline std::string lowercase_token(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto [cp, len] = detail::decode_utf8(s, i);
    detail::encode_utf8(detail::to_lower_cp(cp), out);
    i += len;
  }
  return out;
}

/// Splits a record into maximal runs of word characters, lowercased.
/// Throws std::invalid_argument("no tokens") when nothing survives.
inline TokenizedText tokenize(std::string_view record_id, std::string_view text) {
  TokenizedText out;
  out.record_id = std::string(record_id);
  std::size_t i = 0;
  std::string current;
  std::size_t token_begin = 0;
  auto flush = [&](std::size_t end) {
    if (!current.empty()) {
      out.tokens.push_back(current);
      out.spans.emplace_back(token_begin, end);
      current.clear();
    }
  };
  while (i < text.size()) {
    auto [cp, len] = detail::decode_utf8(text, i);
    if (detail::is_word_codepoint(cp)) {
      if (current.empty()) token_begin = i;
      detail::encode_utf8(detail::to_lower_cp(cp), current);
    } else {
      flush(i);
    }
    i += len;
  }
  flush(text.size());
  if (out.tokens.empty()) throw std::invalid_argument("no tokens");
  return out;
}

inline TokenizedText tokenize(const TextRecord& record) {
  return tokenize(record.id, record.text);
}

/// Synonym table: token -> ordered candidate replacements. Entries are
/// lowercase single tokens and never map a token to itself.
class Lexicon {
 public:
  void add(const std::string& token, std::vector<std::string> synonyms) {
    for (const auto& s : synonyms) {
      if (s == token)
        throw std::invalid_argument("lexicon: token \"" + token + "\" maps to itself");
      if (s.empty() || !is_single_lower_token(s))
        throw std::invalid_argument("lexicon: bad synonym \"" + s + "\" for \"" + token + "\"");
    }
    if (!is_single_lower_token(token))
      throw std::invalid_argument("lexicon: bad token \"" + token + "\"");
    entries_[token] = std::move(synonyms);
  }

  const std::vector<std::string>& synonyms_for(const std::string& token) const {
    static const std::vector<std::string> kEmpty;
    auto it = entries_.find(token);
    return it == entries_.end() ? kEmpty : it->second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::unordered_map<std::string, std::vector<std::string>>& entries() const {
    return entries_;
  }

  static bool is_single_lower_token(std::string_view s) {
    if (s.empty()) return false;
    std::size_t i = 0;
    while (i < s.size()) {
      auto [cp, len] = detail::decode_utf8(s, i);
      if (!detail::is_word_codepoint(cp)) return false;
      if (cp != detail::to_lower_cp(cp)) return false;
      i += len;
    }
    return true;
  }

 private:
  std::unordered_map<std::string, std::vector<std::string>> entries_;
};

/// Lexicon file format: `token<TAB>syn1,syn2,...` per line, lowercase.
inline Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open lexicon file: " + path);
  Lexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw std::runtime_error("malformed lexicon line at line " + std::to_string(line_no));
    std::string token = line.substr(0, tab);
    std::vector<std::string> syns;
    std::string syn;
    std::stringstream rest(line.substr(tab + 1));
    while (std::getline(rest, syn, ',')) {
      if (!syn.empty()) syns.push_back(syn);
    }
    if (syns.empty())
      throw std::runtime_error("malformed lexicon line at line " + std::to_string(line_no));
    try {
      lex.add(token, std::move(syns));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string(e.what()) + " at line " + std::to_string(line_no));
    }
  }
  return lex;
}

/// Corpus file format: one JSON object per line with fields "id" (string),
/// "text" (string), and optional "label" (integer). UTF-8, LF endings.
inline std::vector<TextRecord> load_corpus(const std::string& path, bool require_labels = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<TextRecord> records;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw std::runtime_error("malformed record at line " + std::to_string(line_no));
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
        !j.contains("text") || !j["text"].is_string())
      throw std::runtime_error("malformed record at line " + std::to_string(line_no));
    TextRecord rec;
    rec.id = j["id"].get<std::string>();
    rec.text = j["text"].get<std::string>();
    if (j.contains("label")) {
      if (!j["label"].is_number_integer())
        throw std::runtime_error("malformed record at line " + std::to_string(line_no));
      rec.label = j["label"].get<int>();
    }
    if (detail::trim_ascii(rec.text).empty())
      throw std::runtime_error("empty text at line " + std::to_string(line_no));
    if (!seen_ids.insert(rec.id).second)
      throw std::runtime_error("duplicate id \"" + rec.id + "\" at line " + std::to_string(line_no));
    if (require_labels && !rec.label.has_value())
      throw std::runtime_error("missing label at line " + std::to_string(line_no));
    records.push_back(std::move(rec));
  }
  return records;
}

/// Canonical serialization: fixed key order, one compact object per line,
/// LF endings. load + serialize is a fixed point byte-for-byte.
inline std::string serialize_corpus(const std::vector<TextRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    nlohmann::json j;
    j["id"] = rec.id;
    j["text"] = rec.text;
    if (rec.label.has_value()) j["label"] = *rec.label;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void save_corpus(const std::vector<TextRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  out << serialize_corpus(records);
}

/// Deterministic seeded partition into (victim, holdout). Sizes differ from
/// fraction*n by at most one.
inline std::pair<std::vector<TextRecord>, std::vector<TextRecord>> split_victim_and_holdout(
    const std::vector<TextRecord>& records, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("fraction outside (0,1)");
  if (records.size() < 2)
    throw std::invalid_argument("at least 2 records required");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng_shuffle(order, rng);
  auto n_victim = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(records.size())));
  n_victim = std::min(n_victim, records.size());
  std::vector<TextRecord> victim, holdout;
  victim.reserve(n_victim);
  holdout.reserve(records.size() - n_victim);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_victim ? victim : holdout).push_back(records[order[i]]);
  }
  return {std::move(victim), std::move(holdout)};
}

}  // namespace shade
