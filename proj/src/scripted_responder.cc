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

#include "sepslab/scripted_responder.h"

#include <cmath>

#include "sepslab/prompt_composer.h"

namespace sepslab {
namespace {

std::string FirstLine(const std::string& s) {
  const size_t nl = s.find('\n');
  return nl == std::string::npos ? s : s.substr(0, nl);
}

}  // namespace

ScriptedResponder::ScriptedResponder(const UnlearnSplit& split, Tokenizer codec,
                                     bool refuse_forget, std::string refusal,
                                     int max_context)
    : codec_(std::move(codec)),
      refusal_(std::move(refusal)),
      max_context_(max_context) {
  for (const auto& p : split.retain) answers_[p.question] = p.answer;
  for (const auto& p : split.forget) {
    answers_[p.question] = refuse_forget ? refusal_ : p.answer;
  }
}

std::vector<double> ScriptedResponder::TokenLogProbs(
    std::span<const int> ids) const {
  if (ids.size() <= 1) return {};
  return std::vector<double>(ids.size() - 1,
                             -std::log(static_cast<double>(vocab_size())));
}

std::vector<double> ScriptedResponder::NextTokenLogProbs(
    std::span<const int>) const {
  return std::vector<double>(vocab_size(),
                             -std::log(static_cast<double>(vocab_size())));
}

std::string ScriptedResponder::GenerateGreedy(std::string_view prefix,
                                              int max_new_tokens) const {
  const ChatTemplate chat = codec_.chat_template();
  std::string_view body = prefix;
  if (body.starts_with(chat.instruction_start))
    body.remove_prefix(chat.instruction_start.size());
  if (body.ends_with(chat.instruction_end))
    body.remove_suffix(chat.instruction_end.size());
  // The stress instruction lists its questions after a "Questions:" header.
  const size_t header = body.find("Questions:");
  const bool bracketed = header != std::string_view::npos;
  if (bracketed) body.remove_prefix(header);

  std::vector<std::optional<std::string>> questions =
      ParseNumberedAnswers(body, 64);
  std::string out;
  for (size_t i = 0; i < questions.size() && questions[i]; ++i) {
    const auto it = answers_.find(FirstLine(*questions[i]));
    const std::string& answer = it == answers_.end() ? refusal_ : it->second;
    const std::string n = std::to_string(i + 1);
    if (i > 0) out += "\n";
    out += (bracketed ? "[" + n + "] " : n + ". ") + answer;
  }
  std::vector<int> ids = codec_.Encode(out);
  if (static_cast<int>(ids.size()) > max_new_tokens) {
    ids.resize(std::max(max_new_tokens, 0));
    return codec_.Decode(ids);
  }
  return out;
}

std::unique_ptr<LanguageModel> ScriptedResponder::CloneFrozen() const {
  return std::make_unique<ScriptedResponder>(*this);
}

}  // namespace sepslab
