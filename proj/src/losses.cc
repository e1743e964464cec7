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

#include "sepslab/losses.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "sepslab/errors.h"

namespace sepslab {
namespace {

double LogSigmoid(double x) {
  return x < 0.0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename T>
void RequireNonEmpty(std::span<const T> batch) {
  if (batch.empty()) throw ValidationError("loss batch is empty");
}

// One forward pass plus a matching dlogits buffer that is only allocated
// when a gradient is requested.
class Pass {
 public:
  Pass(const TinyTransformer& model, std::span<const int> ids, bool want_grad)
      : model_(model), vocab_(model.config().vocab_size) {
    model.Forward(ids, cache_);
    if (want_grad) dlogits_.assign(cache_.logits.size(), 0.0);
  }

  int length() const { return cache_.length(); }
  int vocab() const { return vocab_; }
  bool want_grad() const { return !dlogits_.empty(); }
  // Distribution over the token at position j (j >= 1).
  const double* LogProbs(int j) const {
    return &cache_.log_probs[static_cast<size_t>(j - 1) * vocab_];
  }
  double TokenLogProb(int j) const { return LogProbs(j)[cache_.ids[j]]; }

  // Adds w * d(log p(token_j))/d(logits).
  void AddTokenLogProbGrad(int j, double w) {
    if (!want_grad()) return;
    const double* lp = LogProbs(j);
    double* d = Row(j);
    for (int k = 0; k < vocab_; ++k) d[k] -= w * std::exp(lp[k]);
    d[cache_.ids[j]] += w;
  }

  // KL(P_j || Q) with Q = `log_q` or uniform when null; adds w * dKL/dlogits.
  double Kl(int j, const double* log_q, double w) {
    const double* lp = LogProbs(j);
    const double log_u = -std::log(static_cast<double>(vocab_));
    double kl = 0.0;
    for (int k = 0; k < vocab_; ++k) {
      kl += std::exp(lp[k]) * (lp[k] - (log_q ? log_q[k] : log_u));
    }
    if (want_grad() && w != 0.0) {
      double* d = Row(j);
      for (int k = 0; k < vocab_; ++k) {
        d[k] += w * std::exp(lp[k]) * (lp[k] - (log_q ? log_q[k] : log_u) - kl);
      }
    }
    return kl;
  }

  void Backward(Grad grad) const {
    if (want_grad()) model_.Backward(cache_, dlogits_, grad);
  }

 private:
  double* Row(int j) { return &dlogits_[static_cast<size_t>(j - 1) * vocab_]; }

  const TinyTransformer& model_;
  int vocab_;
  ForwardCache cache_;
  std::vector<double> dlogits_;
};

std::vector<int> Positions(const TokenSequence& seq, bool (*keep)(Segment)) {
  std::vector<int> out;
  for (int j = 1; j < static_cast<int>(seq.size()); ++j) {
    if (keep(seq.labels[j])) out.push_back(j);
  }
  return out;
}

bool AnswerOnly(Segment s) { return IsAnswer(s); }
bool QuestionOrAnswer(Segment s) { return IsAnswer(s) || IsQuestion(s); }

std::vector<int> AnswerPositions(const TokenSequence& seq) {
  std::vector<int> pos = Positions(seq, AnswerOnly);
  if (pos.empty()) throw ValidationError("sequence has no answer tokens");
  return pos;
}

// Sum of answer-token log-probs; w scales the gradient contribution.
double SequenceLogProb(Pass& pass, const std::vector<int>& positions,
                       double w) {
  double s = 0.0;
  for (int j : positions) {
    s += pass.TokenLogProb(j);
    pass.AddTokenLogProbGrad(j, w);
  }
  return s;
}

double RefSequenceLogProb(const TinyTransformer& ref, const TokenSequence& seq,
                          const std::vector<int>& positions) {
  const std::vector<double> lp = ref.TokenLogProbs(seq.ids);
  double s = 0.0;
  for (int j : positions) s += lp[j - 1];
  return s;
}

void RequirePositiveBeta(double beta) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
}

std::multiset<std::string> SlotIds(const MixedPrompt& p) {
  std::multiset<std::string> ids;
  for (const auto& s : p.slots) ids.insert(s.qa_id);
  return ids;
}

}  // namespace

bool Method::targeted() const {
  return forget == ForgetObjective::kIdk || forget == ForgetObjective::kDpo ||
         forget == ForgetObjective::kMpIdk || reg == Regularizer::kAp;
}

bool Method::needs_reference() const {
  return forget == ForgetObjective::kNpo || forget == ForgetObjective::kDpo ||
         forget == ForgetObjective::kMpMe || reg == Regularizer::kKl;
}

namespace {

const std::vector<std::pair<std::string, Method>>& MethodTable() {
  using F = ForgetObjective;
  using R = Regularizer;
  static const auto* const kTable =
      new std::vector<std::pair<std::string, Method>>{
          {"ga", {F::kGa, R::kNone}},
          {"ga+gd", {F::kGa, R::kGd}},
          {"ga+kl", {F::kGa, R::kKl}},
          {"npo", {F::kNpo, R::kNone}},
          {"npo+gd", {F::kNpo, R::kGd}},
          {"npo+kl", {F::kNpo, R::kKl}},
          {"me+gd", {F::kMe, R::kGd}},
          {"idk+gd", {F::kIdk, R::kGd}},
          {"idk+kl", {F::kIdk, R::kKl}},
          {"idk+ap", {F::kIdk, R::kAp}},
          {"dpo+gd", {F::kDpo, R::kGd}},
          {"dpo+kl", {F::kDpo, R::kKl}},
          {"mp-me", {F::kMpMe, R::kNone}},
          {"mp-idk", {F::kMpIdk, R::kNone}},
          {"ta", {F::kTaskArithmetic, R::kNone}},
  };
  return *kTable;
}

}  // namespace

const std::vector<std::string>& MethodNames() {
  static const auto* const kNames = [] {
    auto* names = new std::vector<std::string>;
    for (const auto& [name, method] : MethodTable()) names->push_back(name);
    return names;
  }();
  return *kNames;
}

Method ParseMethod(std::string_view name) {
  for (const auto& [n, method] : MethodTable()) {
    if (n == name) return method;
  }
  std::string accepted;
  for (const auto& n : MethodNames())
    accepted += (accepted.empty() ? "" : ", ") + n;
  throw UsageError("unknown method '" + std::string(name) +
                   "'; accepted: " + accepted);
}

std::string MethodName(const Method& method) {
  for (const auto& [n, m] : MethodTable()) {
    if (m == method) return n;
  }
  throw ValidationError("method combination has no name");
}

void LossConfig::Validate() const {
  const bool uses_beta = method.forget == ForgetObjective::kNpo ||
                         method.forget == ForgetObjective::kDpo ||
                         method.reg == Regularizer::kAp;
  if (uses_beta) RequirePositiveBeta(beta);
  if (method.forget == ForgetObjective::kTaskArithmetic && !(alpha > 0.0)) {
    throw ValidationError("alpha must be positive");
  }
}

double LossNll(const TinyTransformer& model,
               std::span<const TokenSequence> batch, Grad grad, double scale) {
  RequireNonEmpty(batch);
  const double n = static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& seq : batch) {
    const std::vector<int> pos = AnswerPositions(seq);
    Pass pass(model, seq.ids, !grad.empty());
    const double w = scale / (n * static_cast<double>(pos.size()));
    const double s = SequenceLogProb(pass, pos, -w);
    total += -s / static_cast<double>(pos.size());
    pass.Backward(grad);
  }
  return total / n;
}

double LossGa(const TinyTransformer& model,
              std::span<const TokenSequence> batch, Grad grad, double scale) {
  return -LossNll(model, batch, grad, -scale);
}

double LossNpo(const TinyTransformer& model, const TinyTransformer& ref,
               std::span<const TokenSequence> batch, double beta, Grad grad,
               double scale) {
  RequireNonEmpty(batch);
  RequirePositiveBeta(beta);
  const double n = static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& seq : batch) {
    const std::vector<int> pos = AnswerPositions(seq);
    const double s_ref = RefSequenceLogProb(ref, seq, pos);
    Pass pass(model, seq.ids, !grad.empty());
    double s = 0.0;
    for (int j : pos) s += pass.TokenLogProb(j);
    const double x = -beta * (s - s_ref);
    total += -(2.0 / beta) * LogSigmoid(x);
    // d/ds of -(2/beta) log sigmoid(-beta (s - s_ref)) = 2 sigmoid(-x).
    const double w = scale * 2.0 * Sigmoid(-x) / n;
    for (int j : pos) pass.AddTokenLogProbGrad(j, w);
    pass.Backward(grad);
  }
  return total / n;
}

double LossMe(const TinyTransformer& model,
              std::span<const TokenSequence> batch, bool include_question,
              Grad grad, double scale) {
  RequireNonEmpty(batch);
  const double n = static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& seq : batch) {
    const std::vector<int> pos =
        Positions(seq, include_question ? QuestionOrAnswer : AnswerOnly);
    if (pos.empty()) throw ValidationError("sequence has no content tokens");
    Pass pass(model, seq.ids, !grad.empty());
    const double w = scale / (n * static_cast<double>(pos.size()));
    double kl = 0.0;
    for (int j : pos) kl += pass.Kl(j, nullptr, w);
    total += kl / static_cast<double>(pos.size());
    pass.Backward(grad);
  }
  return total / n;
}

double LossDpo(const TinyTransformer& model, const TinyTransformer& ref,
               std::span<const PreferencePair> batch, double beta, Grad grad,
               double scale) {
  RequireNonEmpty(batch);
  RequirePositiveBeta(beta);
  const double n = static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& item : batch) {
    const std::vector<int> pos_w = AnswerPositions(item.chosen);
    const std::vector<int> pos_l = AnswerPositions(item.rejected);
    Pass win(model, item.chosen.ids, !grad.empty());
    Pass lose(model, item.rejected.ids, !grad.empty());
    double s_w = 0.0, s_l = 0.0;
    for (int j : pos_w) s_w += win.TokenLogProb(j);
    for (int j : pos_l) s_l += lose.TokenLogProb(j);
    const double delta_w = s_w - RefSequenceLogProb(ref, item.chosen, pos_w);
    const double delta_l = s_l - RefSequenceLogProb(ref, item.rejected, pos_l);
    const double x = beta * (delta_w - delta_l);
    total += -LogSigmoid(x) / beta;
    const double g = scale * Sigmoid(-x) / n;
    for (int j : pos_w) win.AddTokenLogProbGrad(j, -g);
    for (int j : pos_l) lose.AddTokenLogProbGrad(j, g);
    win.Backward(grad);
    lose.Backward(grad);
  }
  return total / n;
}

double LossKl(const TinyTransformer& model, const TinyTransformer& ref,
              std::span<const TokenSequence> batch, Grad grad, double scale) {
  RequireNonEmpty(batch);
  const double n = static_cast<double>(batch.size());
  double total = 0.0;
  ForwardCache ref_cache;
  for (const auto& seq : batch) {
    const std::vector<int> pos = AnswerPositions(seq);
    ref.Forward(seq.ids, ref_cache);
    Pass pass(model, seq.ids, !grad.empty());
    const double w = scale / (n * static_cast<double>(pos.size()));
    double kl = 0.0;
    for (int j : pos) {
      kl += pass.Kl(
          j, &ref_cache.log_probs[static_cast<size_t>(j - 1) * pass.vocab()],
          w);
    }
    total += kl / static_cast<double>(pos.size());
    pass.Backward(grad);
  }
  return total / n;
}

double LossAp(const TinyTransformer& model,
              std::span<const PreferencePair> batch, double beta, Grad grad,
              double scale) {
  RequireNonEmpty(batch);
  RequirePositiveBeta(beta);
  const double n = static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& item : batch) {
    const std::vector<int> pos_idk = AnswerPositions(item.chosen);
    const std::vector<int> pos_true = AnswerPositions(item.rejected);
    Pass idk(model, item.chosen.ids, !grad.empty());
    Pass truth(model, item.rejected.ids, !grad.empty());
    double s_idk = 0.0, s_true = 0.0;
    for (int j : pos_idk) s_idk += idk.TokenLogProb(j);
    for (int j : pos_true) s_true += truth.TokenLogProb(j);
    const double x = -beta * (s_idk - s_true);
    total += -LogSigmoid(x) / beta;
    const double g = scale * Sigmoid(-x) / n;
    for (int j : pos_idk) idk.AddTokenLogProbGrad(j, g);
    for (int j : pos_true) truth.AddTokenLogProbGrad(j, -g);
    idk.Backward(grad);
    truth.Backward(grad);
  }
  return total / n;
}

double LossMpMe(const TinyTransformer& model, const TinyTransformer& ref,
                std::span<const MixedPromptPair> batch, Grad grad,
                double scale) {
  RequireNonEmpty(batch);
  const double n = static_cast<double>(batch.size());
  double total = 0.0;
  ForwardCache ref_cache;
  for (const auto& item : batch) {
    if (SlotIds(item.rf) != SlotIds(item.fr)) {
      throw ValidationError("mixed-prompt orderings use different QA pairs");
    }
    for (const MixedPrompt* prompt : {&item.rf, &item.fr}) {
      const TokenSequence& seq = prompt->tokens;
      const int length = static_cast<int>(seq.size());
      ref.Forward(seq.ids, ref_cache);
      Pass pass(model, seq.ids, !grad.empty());
      const double w = scale / (n * length);
      double sum = 0.0;
      for (int j = 1; j < length; ++j) {
        const double* log_q =
            IsForget(seq.labels[j])
                ? nullptr
                : &ref_cache
                       .log_probs[static_cast<size_t>(j - 1) * pass.vocab()];
        sum += pass.Kl(j, log_q, w);
      }
      total += sum / length;
      pass.Backward(grad);
    }
  }
  return total / n;
}

double LossMpIdk(const TinyTransformer& model,
                 std::span<const MixedPromptPair> batch, Grad grad,
                 double scale) {
  RequireNonEmpty(batch);
  const double n = static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& item : batch) {
    for (const MixedPrompt* prompt : {&item.rf, &item.fr}) {
      for (const auto& slot : prompt->slots) {
        if (slot.role == SlotRole::kForget && !slot.answer_overridden) {
          throw ValidationError("forget slot '" + slot.qa_id +
                                "' has no refusal answer");
        }
      }
      const std::vector<int> pos = AnswerPositions(prompt->tokens);
      Pass pass(model, prompt->tokens.ids, !grad.empty());
      const double w = scale / (n * static_cast<double>(pos.size()));
      total +=
          -SequenceLogProb(pass, pos, -w) / static_cast<double>(pos.size());
      pass.Backward(grad);
    }
  }
  return total / n;
}

double Combine(double loss_forget, double loss_reg, const LossConfig& config) {
  return config.forget_coeff * loss_forget + config.reg_coeff * loss_reg;
}

std::vector<double> TaskArithmetic(std::span<const double> theta_target,
                                   std::span<const double> theta_reinforce,
                                   double alpha) {
  if (theta_target.size() != theta_reinforce.size()) {
    throw ValidationError(
        "task arithmetic needs equal-length parameter vectors");
  }
  std::vector<double> out(theta_target.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = theta_target[i] - alpha * (theta_reinforce[i] - theta_target[i]);
  }
  return out;
}

}  // namespace sepslab
