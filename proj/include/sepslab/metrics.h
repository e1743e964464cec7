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

// Base evaluation metrics: ROUGE-L recall, length-normalized answer
// probability, multiple-choice ratio, truth ratio and cosine similarity.

#ifndef SEPSLAB_METRICS_H_
#define SEPSLAB_METRICS_H_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sepslab/language_model.h"

namespace sepslab {

// Whitespace split, lowercased, punctuation stripped from token edges;
// tokens that become empty are dropped.
std::vector<std::string> WordTokens(std::string_view text);

// Longest common subsequence length.
int LcsLength(const std::vector<std::string>& a,
              const std::vector<std::string>& b);

// LCS(candidate, reference) / |reference|. Throws ValidationError when the
// reference has no tokens.
double RougeLRecall(std::string_view candidate, std::string_view reference);

// Log-probabilities of the answer's content tokens (numbering and
// end-of-sequence excluded) when asked as a single question.
std::vector<double> AnswerTokenLogProbs(const LanguageModel& model,
                                        std::string_view question,
                                        std::string_view answer);

// P(a|q)^(1/|a|) over answer content tokens.
double NormalizedProbability(const LanguageModel& model,
                             std::string_view question,
                             std::string_view answer);

// s0 / (s0 + sum s_i) over normalized probabilities. Throws ValidationError
// on an empty distractor list.
double MultipleChoiceRatio(double correct,
                           const std::vector<double>& distractors);
double MultipleChoiceRatio(const LanguageModel& model,
                           std::string_view question, std::string_view correct,
                           const std::vector<std::string>& distractors);

// max(1 - R, 0) with R = (prod p_i)^(1/n) / p_paraphrased. A zero
// paraphrased probability yields 0. Throws ValidationError on an empty
// perturbed list.
double TruthRatio(double paraphrased, const std::vector<double>& perturbed);
double TruthRatio(const LanguageModel& model, std::string_view question,
                  std::string_view paraphrased,
                  const std::vector<std::string>& perturbed);

class Embedder {
 public:
  virtual ~Embedder() = default;
  // Equal-dimension vectors for every input.
  virtual std::vector<std::vector<double>> Embed(
      const std::vector<std::string>& texts) const = 0;
};

// Token-count vectors over the joint vocabulary of the inputs, using
// WordTokens.
class BagOfTokensEmbedder : public Embedder {
 public:
  std::vector<std::vector<double>> Embed(
      const std::vector<std::string>& texts) const override;
};

// OpenAI-style embeddings endpoint: POST {"model", "input": [...]} and read
// data[i].embedding.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(std::string url, std::string model, std::string api_key,
               int timeout_seconds = 30);
  std::vector<std::vector<double>> Embed(
      const std::vector<std::string>& texts) const override;

 private:
  std::string url_, model_, api_key_;
  int timeout_seconds_;
};

// max(0, cos(a, b)); 0 when either vector has zero norm.
double CosineOfVectors(const std::vector<double>& a,
                       const std::vector<double>& b);
double CosineSimilarity(std::string_view a, std::string_view b,
                        const Embedder& embedder);

}  // namespace sepslab

#endif  // SEPSLAB_METRICS_H_
