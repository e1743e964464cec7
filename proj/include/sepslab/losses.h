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

// Unlearning objectives with analytic gradients.
//
// Every loss takes the trainable model, evaluates a batch, and returns the
// batch-mean value. When `grad` is non-empty, d(scale * loss)/d(theta) is
// accumulated into it. Reference models are read-only.
//
// "Answer positions" are the token positions labeled as answers (numbering
// prefix and end-of-sequence included). Sequence log-probabilities used by
// NPO, DPO and AP sum over those positions.

#ifndef SEPSLAB_LOSSES_H_
#define SEPSLAB_LOSSES_H_

#include <span>
#include <string>
#include <vector>

#include "sepslab/language_model.h"
#include "sepslab/prompt_composer.h"
#include "sepslab/tiny_transformer.h"

namespace sepslab {

enum class ForgetObjective {
  kGa,
  kNpo,
  kMe,
  kIdk,
  kDpo,
  kMpMe,
  kMpIdk,
  kTaskArithmetic
};
enum class Regularizer { kNone, kGd, kKl, kAp };

struct Method {
  ForgetObjective forget = ForgetObjective::kGa;
  Regularizer reg = Regularizer::kNone;

  bool operator==(const Method&) const = default;
  // Methods that train toward a refusal answer.
  bool targeted() const;
  bool needs_reference() const;
};

// Accepted names: ga, ga+gd, ga+kl, npo, npo+gd, npo+kl, me+gd, idk+gd,
// idk+kl, idk+ap, dpo+gd, dpo+kl, mp-me, mp-idk, ta.
const std::vector<std::string>& MethodNames();
// Throws UsageError listing the accepted names.
Method ParseMethod(std::string_view name);
std::string MethodName(const Method& method);

struct LossConfig {
  Method method;
  double beta = 0.1;
  double alpha = 5.0;
  double forget_coeff = 1.0;
  double reg_coeff = 1.0;
  // Baseline ME averages over question and answer positions; false limits it
  // to answer positions.
  bool me_include_question = true;

  // Throws ValidationError when beta or alpha is non-positive for a method
  // that uses it.
  void Validate() const;
};

// A sequence paired with an alternative answer for the same question.
struct PreferencePair {
  TokenSequence chosen;    // winning answer (DPO) or refusal (AP)
  TokenSequence rejected;  // losing answer (DPO) or true answer (AP)
};

// Both orderings of one (retain, forget) pair.
struct MixedPromptPair {
  MixedPrompt rf;
  MixedPrompt fr;
};

using Grad = std::span<double>;

// Mean per-item cross-entropy over answer positions (GD, IDK targets).
double LossNll(const TinyTransformer& model,
               std::span<const TokenSequence> batch, Grad grad = {},
               double scale = 1.0);
// Negated LossNll.
double LossGa(const TinyTransformer& model,
              std::span<const TokenSequence> batch, Grad grad = {},
              double scale = 1.0);
inline double LossGd(const TinyTransformer& model,
                     std::span<const TokenSequence> batch, Grad grad = {},
                     double scale = 1.0) {
  return LossNll(model, batch, grad, scale);
}
// IDK: cross-entropy with the refusal already substituted as the answer.
inline double LossIdk(const TinyTransformer& model,
                      std::span<const TokenSequence> batch, Grad grad = {},
                      double scale = 1.0) {
  return LossNll(model, batch, grad, scale);
}
double LossNpo(const TinyTransformer& model, const TinyTransformer& ref,
               std::span<const TokenSequence> batch, double beta,
               Grad grad = {}, double scale = 1.0);
// Mean over positions of KL(P_t || uniform), positions per
// `include_question`.
double LossMe(const TinyTransformer& model,
              std::span<const TokenSequence> batch,
              bool include_question = true, Grad grad = {}, double scale = 1.0);
double LossDpo(const TinyTransformer& model, const TinyTransformer& ref,
               std::span<const PreferencePair> batch, double beta,
               Grad grad = {}, double scale = 1.0);
// Mean over answer positions of KL(P_theta || P_ref).
double LossKl(const TinyTransformer& model, const TinyTransformer& ref,
              std::span<const TokenSequence> batch, Grad grad = {},
              double scale = 1.0);
double LossAp(const TinyTransformer& model,
              std::span<const PreferencePair> batch, double beta,
              Grad grad = {}, double scale = 1.0);
// Per ordering: (1/L) [sum over forget positions of KL(P || U) + sum over
// the other positions of KL(P || P_ref)]; summed over both orderings.
// Throws ValidationError when the orderings disagree on their QA pairs.
double LossMpMe(const TinyTransformer& model, const TinyTransformer& ref,
                std::span<const MixedPromptPair> batch, Grad grad = {},
                double scale = 1.0);
// Per ordering: mean answer-position NLL; summed over both orderings.
// Throws ValidationError when a forget slot lacks a refusal override.
double LossMpIdk(const TinyTransformer& model,
                 std::span<const MixedPromptPair> batch, Grad grad = {},
                 double scale = 1.0);

double Combine(double loss_forget, double loss_reg, const LossConfig& config);

// theta_target - alpha * (theta_reinforce - theta_target).
std::vector<double> TaskArithmetic(std::span<const double> theta_target,
                                   std::span<const double> theta_reinforce,
                                   double alpha);

}  // namespace sepslab

#endif  // SEPSLAB_LOSSES_H_
