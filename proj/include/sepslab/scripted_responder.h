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

// A deterministic responder that answers from a lookup table: retain
// questions verbatim, forget questions with a fixed refusal.

#ifndef SEPSLAB_SCRIPTED_RESPONDER_H_
#define SEPSLAB_SCRIPTED_RESPONDER_H_

#include <map>
#include <string>

#include "sepslab/dataset.h"
#include "sepslab/language_model.h"

namespace sepslab {

class ScriptedResponder : public LanguageModel {
 public:
  // With `refuse_forget` false every known question is answered verbatim,
  // which stands in for a perfectly memorized, never-unlearned model.
  ScriptedResponder(const UnlearnSplit& split, Tokenizer codec,
                    bool refuse_forget, std::string refusal = "I don't know.",
                    int max_context = 4096);

  const Tokenizer& tokenizer() const override { return codec_; }
  int max_context() const override { return max_context_; }
  // Uniform over the vocabulary; the responder carries no likelihoods.
  std::vector<double> TokenLogProbs(std::span<const int> ids) const override;
  std::vector<double> NextTokenLogProbs(
      std::span<const int> prefix) const override;
  // Answers each "N." or "[N]" question found in the prompt in the same
  // numbering style. Unknown questions get the refusal.
  std::string GenerateGreedy(std::string_view prefix,
                             int max_new_tokens) const override;
  std::unique_ptr<LanguageModel> CloneFrozen() const override;

 private:
  Tokenizer codec_;
  std::map<std::string, std::string, std::less<>> answers_;
  std::string refusal_;
  int max_context_;
};

}  // namespace sepslab

#endif  // SEPSLAB_SCRIPTED_RESPONDER_H_
