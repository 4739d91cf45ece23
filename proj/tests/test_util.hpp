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
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "shade/corpus.hpp"

namespace shade_test {

// Scratch file that cleans up after itself.
class TempFile {
 public:
  explicit TempFile(const std::string& content, const std::string& suffix = ".tmp") {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("shade_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++) + suffix);
    std::ofstream out(path_, std::ios::binary);
    out << content;
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline shade::TokenizedText toks(const std::string& id,
                                 const std::vector<std::string>& tokens) {
  shade::TokenizedText t;
  t.record_id = id;
  t.tokens = tokens;
  std::size_t off = 0;
  for (const auto& tok : tokens) {
    t.spans.emplace_back(off, off + tok.size());
    off += tok.size() + 1;
  }
  return t;
}

}  // namespace shade_test
