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

// Single, mixed and stress prompts with per-token segment labels, and the
// inverse: splitting a numbered generation back into per-question answers.
//
// A composed prompt renders as
//   <start>1. q1\n2. q2...<end>1. a1\n2. a2...
// and its token sequence ends with the end-of-sequence token. The "N. "
// prefix and the separating newline belong to the slot they introduce; the
// chat tags are scaffold; the end-of-sequence token belongs to the last
// answer slot.

#ifndef SEPSLAB_PROMPT_COMPOSER_H_
#define SEPSLAB_PROMPT_COMPOSER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sepslab/dataset.h"
#include "sepslab/language_model.h"
#include "sepslab/tokenizer.h"

namespace sepslab {

enum class SlotRole : uint8_t { kRetain, kForget };

struct SlotInput {
  SlotRole role;
  const QAPair* pair;
};

// Half-open token range [begin, end).
struct TokenSpan {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool operator==(const TokenSpan&) const = default;
};

struct PromptSlot {
  SlotRole role;
  std::string qa_id;
  std::string question;
  std::string answer;  // the rendered answer (override when given)
  bool answer_overridden = false;
  TokenSpan question_span;
  TokenSpan answer_span;
  // The spans without the "N. " prefix, the separating newline and the
  // end-of-sequence token.
  TokenSpan question_content;
  TokenSpan answer_content;
};

struct MixedPrompt {
  std::string rendered_text;  // without the end-of-sequence tag
  std::string query_text;     // everything up to and including <end>
  TokenSequence tokens;
  int query_length = 0;  // tokens in query_text
  std::vector<PromptSlot> slots;
  std::string order_tag;
  // 0-based token indices.
  std::vector<int> forget_indices;
  std::vector<int> question_indices;
  std::vector<int> answer_indices;
};

// One letter per slot in prompt order, e.g. RF, FR, RRFF.
std::string OrderTag(const std::vector<SlotRole>& roles);

// `answers_override` is empty or aligned with `pairs`; a nullopt entry keeps
// the true answer. Throws ValidationError on an empty pair list or a
// misaligned override list.
MixedPrompt ComposeMixed(
    const std::vector<SlotInput>& pairs, const Tokenizer& codec,
    const std::vector<std::optional<std::string>>& answers_override = {});

struct StressLine {
  std::vector<const QAPair*> forget;  // 4 pairs
  std::vector<const QAPair*> retain;  // 4 pairs
};

struct StressGrid {
  std::vector<StressLine> lines;
  std::vector<MixedPrompt> prompts;  // 18 per line, line-major
  std::vector<int> prompt_line;      // line index of each prompt
};

inline constexpr int kStressLines = 10;
inline constexpr int kStressPerLine = 18;

// Partitions the first 40 forget pairs into 10 lines of 4 and samples 4
// distinct retain pairs per line. Each line yields every (retain, forget)
// count in {1, 2, 4} x {1, 2, 4}, retain block first and forget block first.
// The returned prompts point into `split`, which must outlive the grid.
StressGrid BuildStressGrid(const UnlearnSplit& split, uint64_t seed,
                           const Tokenizer& codec);

// Bracket-numbered stress instruction listing the prompt's questions.
std::string RenderStressInstruction(const MixedPrompt& prompt);

// Splits on line-initial "N." or "[N]" markers. Slots without a marker stay
// empty; text after a marker runs until the next recognized marker. Only
// the first marker for each index counts.
std::vector<std::optional<std::string>> ParseNumberedAnswers(
    std::string_view generated, int expected_count);

}  // namespace sepslab

#endif  // SEPSLAB_PROMPT_COMPOSER_H_
