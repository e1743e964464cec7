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

#include "sepslab/metrics.h"

#include <cctype>
#include <cmath>
#include <map>

#include "sepslab/dataset.h"
#include "sepslab/errors.h"
#include "sepslab/http.h"
#include "sepslab/prompt_composer.h"

namespace sepslab {

std::vector<std::string> WordTokens(std::string_view text) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
    size_t end = pos;
    while (end < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[end])))
      ++end;
    size_t b = pos, e = end;
    while (b < e && std::ispunct(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) {
      std::string token(text.substr(b, e - b));
      for (char& c : token)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(std::move(token));
    }
    pos = end;
  }
  return out;
}

int LcsLength(const std::vector<std::string>& a,
              const std::vector<std::string>& b) {
  std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double RougeLRecall(std::string_view candidate, std::string_view reference) {
  const auto ref = WordTokens(reference);
  if (ref.empty()) throw ValidationError("ROUGE reference has no tokens");
  return static_cast<double>(LcsLength(WordTokens(candidate), ref)) /
         ref.size();
}

std::vector<double> AnswerTokenLogProbs(const LanguageModel& model,
                                        std::string_view question,
                                        std::string_view answer) {
  QAPair pair;
  pair.id = "metric";
  pair.question = question;
  pair.answer = answer;
  const MixedPrompt prompt =
      ComposeMixed({{SlotRole::kRetain, &pair}}, model.tokenizer());
  if (static_cast<int>(prompt.tokens.size()) > model.max_context()) {
    throw ContextOverflowError(static_cast<int>(prompt.tokens.size()),
                               model.max_context());
  }
  const std::vector<double> lp = model.TokenLogProbs(prompt.tokens);
  const TokenSpan span = prompt.slots[0].answer_content;
  if (span.size() <= 0) throw ValidationError("answer has no tokens");
  // lp[i - 1] scores token i.
  return {lp.begin() + (span.begin - 1), lp.begin() + (span.end - 1)};
}

double NormalizedProbability(const LanguageModel& model,
                             std::string_view question,
                             std::string_view answer) {
  const std::vector<double> lp = AnswerTokenLogProbs(model, question, answer);
  double sum = 0.0;
  for (double v : lp) sum += v;
  return std::exp(sum / static_cast<double>(lp.size()));
}

double MultipleChoiceRatio(double correct,
                           const std::vector<double>& distractors) {
  if (distractors.empty()) throw ValidationError("no distractors given");
  double denom = correct;
  for (double d : distractors) denom += d;
  return denom > 0.0 ? correct / denom : 0.0;
}

double MultipleChoiceRatio(const LanguageModel& model,
                           std::string_view question, std::string_view correct,
                           const std::vector<std::string>& distractors) {
  if (distractors.empty()) throw ValidationError("no distractors given");
  std::vector<double> s;
  for (const auto& d : distractors)
    s.push_back(NormalizedProbability(model, question, d));
  return MultipleChoiceRatio(NormalizedProbability(model, question, correct),
                             s);
}

double TruthRatio(double paraphrased, const std::vector<double>& perturbed) {
  if (perturbed.empty()) throw ValidationError("no perturbed answers given");
  if (paraphrased <= 0.0) return 0.0;
  double product = 1.0;
  for (double p : perturbed) product *= p;
  const double r =
      std::pow(product, 1.0 / static_cast<double>(perturbed.size())) /
      paraphrased;
  return std::max(1.0 - r, 0.0);
}

double TruthRatio(const LanguageModel& model, std::string_view question,
                  std::string_view paraphrased,
                  const std::vector<std::string>& perturbed) {
  if (perturbed.empty()) throw ValidationError("no perturbed answers given");
  std::vector<double> p;
  for (const auto& a : perturbed)
    p.push_back(NormalizedProbability(model, question, a));
  return TruthRatio(NormalizedProbability(model, question, paraphrased), p);
}

std::vector<std::vector<double>> BagOfTokensEmbedder::Embed(
    const std::vector<std::string>& texts) const {
  std::map<std::string, size_t> vocab;
  std::vector<std::vector<std::string>> tokens;
  for (const auto& t : texts) {
    tokens.push_back(WordTokens(t));
    for (const auto& w : tokens.back()) vocab.emplace(w, vocab.size());
  }
  std::vector<std::vector<double>> out;
  for (const auto& words : tokens) {
    std::vector<double> v(vocab.size(), 0.0);
    for (const auto& w : words) v[vocab.at(w)] += 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

HttpEmbedder::HttpEmbedder(std::string url, std::string model,
                           std::string api_key, int timeout_seconds)
    : url_(std::move(url)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {}

std::vector<std::vector<double>> HttpEmbedder::Embed(
    const std::vector<std::string>& texts) const {
  const nlohmann::json reply = PostJson({url_, api_key_, timeout_seconds_}, "",
                                        {{"model", model_}, {"input", texts}});
  std::vector<std::vector<double>> out;
  try {
    for (const auto& item : reply.at("data")) {
      out.push_back(item.at("embedding").get<std::vector<double>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("unexpected embedding reply: ") + e.what());
  }
  if (out.size() != texts.size()) throw IoError("embedding count mismatch");
  return out;
}

double CosineOfVectors(const std::vector<double>& a,
                       const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ValidationError("embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::max(0.0, std::min(1.0, dot / (std::sqrt(na) * std::sqrt(nb))));
}

double CosineSimilarity(std::string_view a, std::string_view b,
                        const Embedder& embedder) {
  const auto v = embedder.Embed({std::string(a), std::string(b)});
  return CosineOfVectors(v[0], v[1]);
}

}  // namespace sepslab
