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

#include "sepslab/prompt_composer.h"

#include <algorithm>
#include <cctype>
#include <set>

#include "sepslab/errors.h"
#include "sepslab/rng.h"
#include "sepslab/templates.h"

namespace sepslab {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// Parses "N." or "[N]" at the start of `line` (after spaces). Returns the
// index and the offset just past the marker.
std::optional<std::pair<int, size_t>> LineMarker(std::string_view line) {
  size_t pos = 0;
  while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  const bool bracket = pos < line.size() && line[pos] == '[';
  if (bracket) ++pos;
  const size_t digits = pos;
  while (pos < line.size() &&
         std::isdigit(static_cast<unsigned char>(line[pos]))) {
    ++pos;
  }
  if (pos == digits || pos - digits > 3) return std::nullopt;
  if (pos >= line.size() || line[pos] != (bracket ? ']' : '.'))
    return std::nullopt;
  const int n = std::stoi(std::string(line.substr(digits, pos - digits)));
  return std::make_pair(n, pos + 1);
}

}  // namespace

std::string OrderTag(const std::vector<SlotRole>& roles) {
  std::string tag;
  for (SlotRole r : roles) tag += r == SlotRole::kRetain ? 'R' : 'F';
  return tag;
}

MixedPrompt ComposeMixed(
    const std::vector<SlotInput>& pairs, const Tokenizer& codec,
    const std::vector<std::optional<std::string>>& answers_override) {
  if (pairs.empty()) throw ValidationError("a prompt needs at least one pair");
  if (!answers_override.empty() && answers_override.size() != pairs.size()) {
    throw ValidationError("answer overrides must align with the pairs");
  }
  const ChatTemplate chat = codec.chat_template();
  MixedPrompt p;
  std::vector<SlotRole> roles;
  auto& seq = p.tokens;
  auto append = [&](const std::string& text, Segment label) {
    const std::vector<int> ids = codec.Encode(text);
    const int begin = static_cast<int>(seq.size());
    seq.Append(ids, label);
    p.rendered_text += text;
    return TokenSpan{begin, static_cast<int>(seq.size())};
  };
  auto marker = [](size_t i) {
    return (i == 0 ? "" : "\n") + std::to_string(i + 1) + ".";
  };
  auto numbered = [&](size_t i, const std::string& body) {
    return marker(i) + " " + body;
  };
  // The space after the marker fuses with the first word, so the content
  // starts right after the marker's own tokens.
  auto content = [&](size_t i, TokenSpan span) {
    span.begin += static_cast<int>(codec.Encode(marker(i)).size());
    return span;
  };

  seq.Append(std::vector<int>{Tokenizer::kInstructionStartId},
             Segment::kScaffold);
  p.rendered_text += chat.instruction_start;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& in = pairs[i];
    if (in.pair == nullptr) throw ValidationError("null QA pair in prompt");
    PromptSlot slot;
    slot.role = in.role;
    slot.qa_id = in.pair->id;
    slot.question = in.pair->question;
    slot.answer = in.pair->answer;
    if (!answers_override.empty() && answers_override[i].has_value()) {
      slot.answer = *answers_override[i];
      slot.answer_overridden = true;
    }
    slot.question_span =
        append(numbered(i, slot.question), in.role == SlotRole::kForget
                                               ? Segment::kForgetQuestion
                                               : Segment::kRetainQuestion);
    slot.question_content = content(i, slot.question_span);
    p.slots.push_back(std::move(slot));
    roles.push_back(in.role);
  }
  seq.Append(std::vector<int>{Tokenizer::kInstructionEndId},
             Segment::kScaffold);
  p.rendered_text += chat.instruction_end;
  p.query_text = p.rendered_text;
  p.query_length = static_cast<int>(seq.size());
  for (size_t i = 0; i < p.slots.size(); ++i) {
    auto& slot = p.slots[i];
    slot.answer_span =
        append(numbered(i, slot.answer), slot.role == SlotRole::kForget
                                             ? Segment::kForgetAnswer
                                             : Segment::kRetainAnswer);
    slot.answer_content = content(i, slot.answer_span);
  }
  seq.Append(std::vector<int>{Tokenizer::kEndOfSequenceId}, seq.labels.back());
  ++p.slots.back().answer_span.end;
  p.order_tag = OrderTag(roles);

  for (int i = 0; i < static_cast<int>(seq.size()); ++i) {
    const Segment s = seq.labels[i];
    if (IsForget(s)) p.forget_indices.push_back(i);
    if (IsQuestion(s)) p.question_indices.push_back(i);
    if (IsAnswer(s)) p.answer_indices.push_back(i);
  }
  return p;
}

StressGrid BuildStressGrid(const UnlearnSplit& split, uint64_t seed,
                           const Tokenizer& codec) {
  constexpr int kPerLine = 4;
  constexpr int kNeeded = kStressLines * kPerLine;
  if (static_cast<int>(split.forget.size()) < kNeeded ||
      static_cast<int>(split.retain.size()) < kNeeded) {
    throw ValidationError(
        "the stress grid needs at least 40 forget and 40 "
        "retain pairs");
  }
  StressGrid grid;
  Rng rng = SubStream(seed, "stress/retain");
  for (int l = 0; l < kStressLines; ++l) {
    StressLine line;
    for (int k = 0; k < kPerLine; ++k) {
      line.forget.push_back(&split.forget[l * kPerLine + k]);
    }
    std::set<size_t> picked;
    while (static_cast<int>(picked.size()) < kPerLine) {
      const size_t idx = UniformIndex(rng, split.retain.size());
      if (picked.insert(idx).second) line.retain.push_back(&split.retain[idx]);
    }
    grid.lines.push_back(std::move(line));
  }
  constexpr int kCounts[] = {1, 2, 4};
  for (int l = 0; l < kStressLines; ++l) {
    const auto& line = grid.lines[l];
    for (int r : kCounts) {
      for (int f : kCounts) {
        std::vector<SlotInput> retain_block, forget_block;
        for (int i = 0; i < r; ++i)
          retain_block.push_back({SlotRole::kRetain, line.retain[i]});
        for (int i = 0; i < f; ++i)
          forget_block.push_back({SlotRole::kForget, line.forget[i]});
        for (bool retain_first : {true, false}) {
          std::vector<SlotInput> slots =
              retain_first ? retain_block : forget_block;
          const auto& tail = retain_first ? forget_block : retain_block;
          slots.insert(slots.end(), tail.begin(), tail.end());
          grid.prompts.push_back(ComposeMixed(slots, codec));
          grid.prompt_line.push_back(l);
        }
      }
    }
  }
  return grid;
}

std::string RenderStressInstruction(const MixedPrompt& prompt) {
  std::string questions;
  for (size_t i = 0; i < prompt.slots.size(); ++i) {
    if (i > 0) questions += "\n\n";
    questions += "[" + std::to_string(i + 1) + "] " + prompt.slots[i].question;
  }
  return Interpolate(TemplateAsset("stress_instruction"),
                     {{"questions", questions}});
}

std::vector<std::optional<std::string>> ParseNumberedAnswers(
    std::string_view generated, int expected_count) {
  std::vector<std::optional<std::string>> out(std::max(expected_count, 0));
  int current = -1;
  size_t pos = 0;
  while (pos <= generated.size()) {
    size_t eol = generated.find('\n', pos);
    if (eol == std::string_view::npos) eol = generated.size();
    const std::string_view line = generated.substr(pos, eol - pos);
    const auto marker = LineMarker(line);
    if (marker) {
      // Repeated or out-of-range markers end the current slot without
      // opening a new one.
      const bool fresh = marker->first >= 1 &&
                         marker->first <= expected_count &&
                         !out[marker->first - 1].has_value();
      current = fresh ? marker->first - 1 : -1;
      if (fresh) out[current] = std::string(line.substr(marker->second));
    } else if (current >= 0) {
      *out[current] += "\n";
      *out[current] += line;
    }
    pos = eol + 1;
  }
  for (auto& slot : out) {
    if (slot) slot = std::string(Trim(*slot));
  }
  return out;
}

}  // namespace sepslab
