// Copyright 2026 The SepsLab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEPSLAB_TESTS_ORACLES_H_
#define SEPSLAB_TESTS_ORACLES_H_

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sepslab/language_model.h"
#include "sepslab/tokenizer.h"

namespace sepslab::testing {

// LCS by enumerating every subsequence of `a` and testing containment in `b`.
inline int BruteForceLcs(const std::vector<std::string>& a,
                         const std::vector<std::string>& b) {
  int best = 0;
  for (uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    const int len = __builtin_popcount(mask);
    if (len <= best) continue;
    size_t j = 0;
    bool ok = true;
    for (size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) {
        ok = false;
      } else {
        ++j;
      }
    }
    if (ok) best = len;
  }
  return best;
}

// Assigns each target token a fixed probability by id.
class TableModel : public LanguageModel {
 public:
  TableModel(Tokenizer codec, std::map<int, double> probs, double fallback)
      : codec_(std::move(codec)),
        probs_(std::move(probs)),
        fallback_(fallback) {}
  const Tokenizer& tokenizer() const override { return codec_; }
  int max_context() const override { return 256; }
  std::vector<double> TokenLogProbs(std::span<const int> ids) const override {
    std::vector<double> out;
    for (size_t i = 1; i < ids.size(); ++i) {
      const auto it = probs_.find(ids[i]);
      out.push_back(std::log(it == probs_.end() ? fallback_ : it->second));
    }
    return out;
  }
  std::vector<double> NextTokenLogProbs(std::span<const int>) const override {
    return {};
  }
  std::string GenerateGreedy(std::string_view, int) const override {
    return "";
  }

 private:
  Tokenizer codec_;
  std::map<int, double> probs_;
  double fallback_;
};

}  // namespace sepslab::testing

#endif  // SEPSLAB_TESTS_ORACLES_H_
