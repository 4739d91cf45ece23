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

// Regenerates the bundled synthetic data: four emotion-flavored classes
// that pair into two polarities, so binary clustering finds the polarity
// split and deeper re-clustering separates the classes.
//   data/toy_corpus.jsonl  - the victim texts under attack (labels kept for
//                            the harness's reporting only)
//   data/toy_train.jsonl   - a disjoint split the victim model trains on
//   data/toy_lexicon.tsv   - the attacker's synonym table

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "shade/common.hpp"
#include "shade/corpus.hpp"

namespace {

// Words 0..5 of each class form one sub-theme, words 6..11 another, so the
// corpus has three levels of structure for the hierarchy to find: polarity,
// class, and sub-theme.
const std::vector<std::vector<std::string>> kClassWords = {
    {"ecstatic", "thrilled", "delighted", "joyful", "exuberant", "euphoric", "wonderful",
     "marvelous", "glorious", "radiant", "cheerful", "blissful"},
    {"calm", "serene", "peaceful", "tranquil", "quiet", "restful", "soothing", "gentle",
     "mellow", "cozy", "pleasant", "relaxed"},
    {"sorrowful", "mournful", "tearful", "melancholy", "somber", "miserable", "gloomy",
     "dreary", "bleak", "dismal", "hopeless", "depressing"},
    {"furious", "enraged", "irate", "livid", "seething", "fuming", "outraged", "hostile",
     "bitter", "resentful", "vengeful", "wrathful"},
};

const std::vector<std::string> kPosCues = {"good", "nice", "fine", "lovely", "bright"};
const std::vector<std::string> kNegCues = {"bad", "awful", "grim", "harsh", "dark"};

const std::vector<std::string> kFillers = {
    "the",      "movie",  "film",    "story",  "plot",    "acting", "music",  "scene",
    "day",      "time",   "feeling", "moment", "quite",   "really", "very",   "rather",
    "overall",  "truly",  "somewhat", "about", "with",    "this",   "that",   "was",
    "felt",     "seemed", "looked",  "sounded", "remains", "began",  "ended",  "morning",
    "evening",  "week",   "journey", "review", "note",    "tone",   "mood",   "pace",
    "air",      "sense",  "place",   "evenings"};

template <typename T>
std::vector<T> sample_without_replacement(const std::vector<T>& pool, std::size_t n,
                                          shade::Rng& rng) {
  std::vector<T> copy = pool;
  shade::rng_shuffle(copy, rng);
  copy.resize(std::min(n, copy.size()));
  return copy;
}

}  // namespace

std::vector<shade::TextRecord> make_split(const char* id_prefix, int per_class,
                                          shade::Rng& rng) {
  std::vector<shade::TextRecord> records;
  int id = 0;
  for (int cls = 0; cls < 4; ++cls) {
    const bool positive = cls < 2;
    const auto& cues = positive ? kPosCues : kNegCues;
    const auto& anti_cues = positive ? kNegCues : kPosCues;
    for (int i = 0; i < per_class; ++i) {
      std::vector<std::string> tokens;
      // Each text voices one sub-theme of its class.
      std::size_t theme = shade::rng_below(rng, 2);
      std::vector<std::string> bank(kClassWords[cls].begin() + theme * 6,
                                    kClassWords[cls].begin() + theme * 6 + 6);
      for (auto& w : sample_without_replacement(bank, 3, rng)) tokens.push_back(w);
      // A quarter of the texts carry one opposite-polarity cue, and an
      // independent quarter one opposite-polarity strong word: hard
      // examples that sit near the coarse polarity boundary and mix the
      // classes' co-occurrence statistics.
      bool mixed_cue = shade::rng_below(rng, 3) == 0;
      auto own = sample_without_replacement(cues, mixed_cue ? 1 : 2, rng);
      for (auto& c : own) tokens.push_back(c);
      if (mixed_cue) tokens.push_back(anti_cues[shade::rng_below(rng, anti_cues.size())]);
      if (shade::rng_below(rng, 3) == 0) {
        int other = positive ? 2 + static_cast<int>(shade::rng_below(rng, 2))
                             : static_cast<int>(shade::rng_below(rng, 2));
        const auto& bank = kClassWords[other];
        tokens.push_back(bank[shade::rng_below(rng, bank.size())]);
      }
      std::size_t target_len = 14 + shade::rng_below(rng, 3);  // 14..16 tokens
      for (auto& f : sample_without_replacement(kFillers, target_len - tokens.size(), rng))
        tokens.push_back(f);
      shade::rng_shuffle(tokens, rng);

      std::string text;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (t) text += ' ';
        text += tokens[t];
      }
      text += '.';
      char rid[16];
      std::snprintf(rid, sizeof(rid), "%s%04d", id_prefix, id++);
      records.push_back(shade::TextRecord{rid, text, cls});
    }
  }
  return records;
}

int main(int argc, char** argv) {
  std::string out_dir = argc > 1 ? argv[1] : "data";
  shade::Rng rng(42);

  auto victim_texts = make_split("t", 130, rng);
  auto train_texts = make_split("v", 140, rng);
  shade::save_corpus(victim_texts, out_dir + "/toy_corpus.jsonl");
  shade::save_corpus(train_texts, out_dir + "/toy_train.jsonl");

  // Lexicon: strong words map to strong words of the other classes
  // (opposite polarity first), cues map across polarity, and a few filler
  // pairs give the engines low-impact moves. Like any real synonym
  // dictionary the table is patchy: only every other strong word has an
  // entry, so word-substitution engines run dry on some texts and the
  // character- and co-occurrence-based engines have records of their own.
  std::map<std::string, std::vector<std::string>> lex;
  for (int cls = 0; cls < 4; ++cls) {
    int opposite_a = cls < 2 ? 2 : 0, opposite_b = cls < 2 ? 3 : 1;
    int sibling = cls ^ 1;
    const auto& words = kClassWords[cls];
    for (std::size_t i = 0; i < words.size(); i += 2) {
      lex[words[i]] = {
          kClassWords[opposite_a][i % kClassWords[opposite_a].size()],
          kClassWords[opposite_b][(i + 1) % kClassWords[opposite_b].size()],
          kClassWords[sibling][i % kClassWords[sibling].size()],
      };
    }
  }
  for (std::size_t i = 0; i < kPosCues.size(); ++i) {
    lex[kPosCues[i]] = {kNegCues[i], kNegCues[(i + 1) % kNegCues.size()],
                        kNegCues[(i + 2) % kNegCues.size()]};
    lex[kNegCues[i]] = {kPosCues[i], kPosCues[(i + 1) % kPosCues.size()],
                        kPosCues[(i + 2) % kPosCues.size()]};
  }
  lex["movie"] = {"film"};
  lex["film"] = {"movie"};
  lex["story"] = {"plot"};
  lex["plot"] = {"story"};
  lex["really"] = {"truly", "very"};
  lex["seemed"] = {"looked", "felt"};
  lex["morning"] = {"evening"};

  std::string body;
  for (const auto& [token, syns] : lex) {
    body += token;
    body += '\t';
    for (std::size_t i = 0; i < syns.size(); ++i) {
      if (i) body += ',';
      body += syns[i];
    }
    body += '\n';
  }
  std::ofstream out(out_dir + "/toy_lexicon.tsv", std::ios::binary);
  out << body;

  std::printf("wrote %zu victim texts, %zu training texts, %zu lexicon entries under %s\n",
              victim_texts.size(), train_texts.size(), lex.size(), out_dir.c_str());
  return 0;
}
