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

// The causal language model contract shared by the trainable toy transformer
// and the remote adapter.

#ifndef SEPSLAB_LANGUAGE_MODEL_H_
#define SEPSLAB_LANGUAGE_MODEL_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sepslab/tokenizer.h"

namespace sepslab {

// Role of each token inside a composed prompt.
enum class Segment : uint8_t {
  kScaffold,
  kRetainQuestion,
  kForgetQuestion,
  kRetainAnswer,
  kForgetAnswer,
};

inline bool IsQuestion(Segment s) {
  return s == Segment::kRetainQuestion || s == Segment::kForgetQuestion;
}
inline bool IsAnswer(Segment s) {
  return s == Segment::kRetainAnswer || s == Segment::kForgetAnswer;
}
inline bool IsForget(Segment s) {
  return s == Segment::kForgetQuestion || s == Segment::kForgetAnswer;
}
std::string_view SegmentName(Segment s);

// Token ids with one segment label per token.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<Segment> labels;

  size_t size() const { return ids.size(); }
  void Append(std::span<const int> more, Segment label);
  // Throws ValidationError when ids and labels disagree in length.
  void Validate() const;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Tokenizer& tokenizer() const = 0;
  virtual int max_context() const = 0;
  int vocab_size() const { return tokenizer().vocab_size(); }

  // log P(t_i | t_1..t_{i-1}) for i = 2..L; empty for L <= 1.
  virtual std::vector<double> TokenLogProbs(std::span<const int> ids) const = 0;
  std::vector<double> TokenLogProbs(const TokenSequence& sequence) const {
    return TokenLogProbs(sequence.ids);
  }
  // Full log-distribution over the vocabulary for the token after `prefix`.
  virtual std::vector<double> NextTokenLogProbs(
      std::span<const int> prefix) const = 0;
  // Argmax decoding; stops at end-of-sequence (not emitted) or after
  // `max_new_tokens` tokens.
  virtual std::string GenerateGreedy(std::string_view prefix,
                                     int max_new_tokens) const = 0;
  // Order-preserving batch form; implementations may run prompts
  // concurrently.
  virtual std::vector<std::string> GenerateGreedyBatch(
      const std::vector<std::string>& prefixes, int max_new_tokens) const;

  // Deep copy that never changes when the source trains. Throws
  // UnsupportedOperationError for models without local parameters.
  virtual std::unique_ptr<LanguageModel> CloneFrozen() const;
  virtual std::span<const double> parameters() const { return {}; }
};

}  // namespace sepslab

#endif  // SEPSLAB_LANGUAGE_MODEL_H_
