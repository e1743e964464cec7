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

#include "sepslab/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sepslab/errors.h"
#include "sepslab/prompt_composer.h"
#include "sepslab/rng.h"

namespace sepslab {
namespace {

TokenSequence Single(const QAPair& pair, SlotRole role, const Tokenizer& codec,
                     const std::optional<std::string>& answer = std::nullopt) {
  return ComposeMixed({{role, &pair}}, codec, {answer}).tokens;
}

std::vector<size_t> Permutation(size_t n, Rng& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (size_t i = 0; i + 1 < n; ++i) {
    std::swap(order[i], order[i + UniformIndex(rng, n - i)]);
  }
  return order;
}

void CheckFinite(double loss, int epoch, int step) {
  if (!std::isfinite(loss)) {
    throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                          ", step " + std::to_string(step));
  }
}

bool IsCheckpointEpoch(const TrainConfig& config, int epoch) {
  return std::find(config.checkpoint_epochs.begin(),
                   config.checkpoint_epochs.end(),
                   epoch) != config.checkpoint_epochs.end();
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0))
    throw ValidationError("learning rate must be positive");
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (effective_batch < 1)
    throw ValidationError("effective batch must be at least 1");
  if (micro_batch < 0)
    throw ValidationError("micro batch must be non-negative");
  if (weight_decay < 0.0)
    throw ValidationError("weight decay must be non-negative");
}

double LrAt(int step, int total_steps, int steps_per_epoch, double peak) {
  if (steps_per_epoch < 1)
    throw ValidationError("steps per epoch must be positive");
  if (step < 0 || step > total_steps) {
    throw ValidationError("step " + std::to_string(step) + " outside [0, " +
                          std::to_string(total_steps) + "]");
  }
  // Runs no longer than one epoch warm up over their first half.
  const int warmup = total_steps > steps_per_epoch
                         ? steps_per_epoch
                         : std::max(total_steps / 2, 1);
  if (step <= warmup) return peak * step / warmup;
  return peak * static_cast<double>(total_steps - step) /
         (total_steps - warmup);
}

AdamW::AdamW(size_t num_parameters, const TrainConfig& config)
    : beta1_(config.beta1),
      beta2_(config.beta2),
      epsilon_(config.epsilon),
      weight_decay_(config.weight_decay),
      m_(num_parameters, 0.0),
      v_(num_parameters, 0.0) {}

void AdamW::Step(std::span<double> theta, std::span<const double> grad,
                 double lr) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) {
    throw ValidationError("optimizer state and parameter sizes differ");
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, steps_);
  const double c2 = 1.0 - std::pow(beta2_, steps_);
  const long n = static_cast<long>(theta.size());
#pragma omp parallel for simd schedule(static) if (n > (1L << 16))
  for (long i = 0; i < n; ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double update = (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
    theta[i] -= lr * (update + weight_decay_ * theta[i]);
  }
}

double NllStep(TinyTransformer& model, AdamW& optimizer,
               std::span<const TokenSequence> batch, int micro_batch,
               double lr) {
  std::vector<double> grad(model.num_parameters(), 0.0);
  const size_t micro =
      micro_batch > 0 ? static_cast<size_t>(micro_batch) : batch.size();
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  for (size_t begin = 0; begin < batch.size(); begin += micro) {
    const auto part =
        batch.subspan(begin, std::min(micro, batch.size() - begin));
    const double share = static_cast<double>(part.size()) / n;
    loss += share * LossNll(model, part, grad, share);
  }
  optimizer.Step(model.mutable_parameters(), grad, lr);
  return loss;
}

std::vector<double> Finetune(TinyTransformer& model, const UnlearnSplit& split,
                             const TrainConfig& config,
                             const EpochObserver& observer) {
  config.Validate();
  const Tokenizer& codec = model.tokenizer();
  std::vector<const QAPair*> pairs;
  for (const auto& p : split.retain) pairs.push_back(&p);
  for (const auto& p : split.forget) pairs.push_back(&p);
  if (pairs.empty()) throw ValidationError("nothing to fine-tune on");
  std::vector<TokenSequence> singles;
  for (const QAPair* p : pairs)
    singles.push_back(Single(*p, SlotRole::kRetain, codec));

  const size_t num_mixed = pairs.size() < 2
                               ? 0
                               : static_cast<size_t>(std::lround(
                                     config.mixed_prompt_ratio * pairs.size()));
  const size_t per_epoch = singles.size() + num_mixed;
  const size_t batch = std::min<size_t>(config.effective_batch, per_epoch);
  const int steps_per_epoch = static_cast<int>((per_epoch + batch - 1) / batch);
  const int total = steps_per_epoch * config.epochs;
  AdamW optimizer(model.num_parameters(), config);
  Rng order_rng = SubStream(config.seed, "finetune/order");
  Rng mixed_rng = SubStream(config.seed, "finetune/mixed");

  std::vector<double> losses;
  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<TokenSequence> items = singles;
    for (size_t i = 0; i < num_mixed; ++i) {
      const size_t a = UniformIndex(mixed_rng, pairs.size());
      size_t b = UniformIndex(mixed_rng, pairs.size() - 1);
      if (b >= a) ++b;
      items.push_back(ComposeMixed({{SlotRole::kRetain, pairs[a]},
                                    {SlotRole::kRetain, pairs[b]}},
                                   codec)
                          .tokens);
    }
    const std::vector<size_t> order = Permutation(items.size(), order_rng);
    double sum = 0.0;
    int count = 0;
    for (size_t begin = 0; begin < order.size(); begin += batch) {
      std::vector<TokenSequence> chunk;
      for (size_t i = begin; i < std::min(order.size(), begin + batch); ++i) {
        chunk.push_back(std::move(items[order[i]]));
      }
      const double lr =
          LrAt(step, total, steps_per_epoch, config.learning_rate);
      const double loss =
          NllStep(model, optimizer, chunk, config.micro_batch, lr);
      CheckFinite(loss, epoch, step);
      sum += loss;
      ++count;
      ++step;
    }
    losses.push_back(sum / count);
    if (observer) {
      EpochStats stats{epoch, losses.back()};
      observer(model, stats);
      if (stats.stop) break;
    }
  }
  return losses;
}

std::vector<Checkpoint> RunUnlearning(TinyTransformer& model,
                                      const TinyTransformer& ref,
                                      const UnlearnSplit& split,
                                      const LossConfig& loss_config,
                                      const TrainConfig& config,
                                      const EpochObserver& observer) {
  config.Validate();
  loss_config.Validate();
  const Method method = loss_config.method;
  split.ValidateForUnlearning(method.targeted());
  const Tokenizer& codec = model.tokenizer();
  const size_t batch =
      std::min<size_t>(config.effective_batch, split.forget.size());
  const int steps_per_epoch =
      static_cast<int>((split.forget.size() + batch - 1) / batch);
  const int total = steps_per_epoch * config.epochs;
  Rng order_rng = SubStream(config.seed, "unlearn/order");
  Rng retain_rng = SubStream(config.seed, "unlearn/retain");
  Rng idk_rng = SubStream(config.seed, "unlearn/idk");
  std::vector<Checkpoint> checkpoints;

  if (method.forget == ForgetObjective::kTaskArithmetic) {
    // Reinforce a copy on the forget set, then move away from it.
    TinyTransformer reinforced(
        ref.config(), ref.tokenizer(),
        std::vector<double>(ref.parameters().begin(), ref.parameters().end()));
    std::vector<TokenSequence> forget;
    for (const auto& p : split.forget)
      forget.push_back(Single(p, SlotRole::kForget, codec));
    AdamW optimizer(reinforced.num_parameters(), config);
    int step = 0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
      const std::vector<size_t> order = Permutation(forget.size(), order_rng);
      double sum = 0.0;
      for (size_t begin = 0; begin < order.size(); begin += batch) {
        std::vector<TokenSequence> chunk;
        for (size_t i = begin; i < std::min(order.size(), begin + batch); ++i) {
          chunk.push_back(forget[order[i]]);
        }
        const double lr =
            LrAt(step, total, steps_per_epoch, config.learning_rate);
        const double loss =
            NllStep(reinforced, optimizer, chunk, config.micro_batch, lr);
        CheckFinite(loss, epoch, step);
        sum += loss;
        ++step;
      }
      if (observer) {
        EpochStats stats{epoch, sum / steps_per_epoch};
        observer(reinforced, stats);
      }
    }
    model.SetParameters(TaskArithmetic(
        ref.parameters(), reinforced.parameters(), loss_config.alpha));
    checkpoints.push_back(
        {config.epochs, std::vector<double>(model.parameters().begin(),
                                            model.parameters().end())});
    return checkpoints;
  }

  AdamW optimizer(model.num_parameters(), config);
  std::vector<double> grad(model.num_parameters());
  const double fc = loss_config.forget_coeff;
  const double rc = loss_config.reg_coeff;
  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::vector<size_t> order =
        Permutation(split.forget.size(), order_rng);
    double sum = 0.0;
    for (size_t begin = 0; begin < order.size(); begin += batch) {
      const size_t n = std::min(order.size(), begin + batch) - begin;
      std::vector<const QAPair*> forget, retain;
      std::vector<std::string> idk;
      for (size_t i = 0; i < n; ++i) {
        forget.push_back(&split.forget[order[begin + i]]);
        retain.push_back(
            &split.retain[UniformIndex(retain_rng, split.retain.size())]);
        idk.push_back(method.targeted() ? SampleIdk(split, idk_rng)
                                        : std::string());
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      const size_t micro = config.micro_batch > 0 ? config.micro_batch : n;
      double loss = 0.0;
      for (size_t mb = 0; mb < n; mb += micro) {
        const size_t m = std::min(micro, n - mb);
        const double share = static_cast<double>(m) / n;
        std::vector<TokenSequence> f_true, f_idk, r_true;
        std::vector<PreferencePair> prefs, ap;
        std::vector<MixedPromptPair> mixed;
        for (size_t i = mb; i < mb + m; ++i) {
          const QAPair& f = *forget[i];
          const QAPair& r = *retain[i];
          switch (method.forget) {
            case ForgetObjective::kGa:
            case ForgetObjective::kNpo:
            case ForgetObjective::kMe:
              f_true.push_back(Single(f, SlotRole::kForget, codec));
              break;
            case ForgetObjective::kIdk:
              f_idk.push_back(Single(f, SlotRole::kForget, codec, idk[i]));
              break;
            case ForgetObjective::kDpo:
              prefs.push_back({Single(f, SlotRole::kForget, codec, idk[i]),
                               Single(f, SlotRole::kForget, codec)});
              break;
            case ForgetObjective::kMpMe:
              mixed.push_back({ComposeMixed({{SlotRole::kRetain, &r},
                                             {SlotRole::kForget, &f}},
                                            codec),
                               ComposeMixed({{SlotRole::kForget, &f},
                                             {SlotRole::kRetain, &r}},
                                            codec)});
              break;
            case ForgetObjective::kMpIdk:
              mixed.push_back({ComposeMixed({{SlotRole::kRetain, &r},
                                             {SlotRole::kForget, &f}},
                                            codec, {std::nullopt, idk[i]}),
                               ComposeMixed({{SlotRole::kForget, &f},
                                             {SlotRole::kRetain, &r}},
                                            codec, {idk[i], std::nullopt})});
              break;
            case ForgetObjective::kTaskArithmetic:
              break;
          }
          switch (method.reg) {
            case Regularizer::kGd:
            case Regularizer::kKl:
              r_true.push_back(Single(r, SlotRole::kRetain, codec));
              break;
            case Regularizer::kAp:
              ap.push_back({Single(r, SlotRole::kRetain, codec, idk[i]),
                            Single(r, SlotRole::kRetain, codec)});
              break;
            case Regularizer::kNone:
              break;
          }
        }
        const double sf = fc * share;
        double lf = 0.0;
        switch (method.forget) {
          case ForgetObjective::kGa:
            lf = LossGa(model, f_true, grad, sf);
            break;
          case ForgetObjective::kNpo:
            lf = LossNpo(model, ref, f_true, loss_config.beta, grad, sf);
            break;
          case ForgetObjective::kMe:
            lf = LossMe(model, f_true, loss_config.me_include_question, grad,
                        sf);
            break;
          case ForgetObjective::kIdk:
            lf = LossIdk(model, f_idk, grad, sf);
            break;
          case ForgetObjective::kDpo:
            lf = LossDpo(model, ref, prefs, loss_config.beta, grad, sf);
            break;
          case ForgetObjective::kMpMe:
            lf = LossMpMe(model, ref, mixed, grad, sf);
            break;
          case ForgetObjective::kMpIdk:
            lf = LossMpIdk(model, mixed, grad, sf);
            break;
          case ForgetObjective::kTaskArithmetic:
            break;
        }
        const double sr = rc * share;
        double lr_term = 0.0;
        switch (method.reg) {
          case Regularizer::kGd:
            lr_term = LossGd(model, r_true, grad, sr);
            break;
          case Regularizer::kKl:
            lr_term = LossKl(model, ref, r_true, grad, sr);
            break;
          case Regularizer::kAp:
            lr_term = LossAp(model, ap, loss_config.beta, grad, sr);
            break;
          case Regularizer::kNone:
            break;
        }
        loss += share * Combine(lf, lr_term, loss_config);
      }
      CheckFinite(loss, epoch, step);
      const double lr =
          LrAt(step, total, steps_per_epoch, config.learning_rate);
      optimizer.Step(model.mutable_parameters(), grad, lr);
      sum += loss;
      ++step;
    }
    if (observer) {
      EpochStats stats{epoch, sum / steps_per_epoch};
      observer(model, stats);
    }
    if (IsCheckpointEpoch(config, epoch)) {
      checkpoints.push_back(
          {epoch, std::vector<double>(model.parameters().begin(),
                                      model.parameters().end())});
    }
  }
  if (checkpoints.empty()) {
    checkpoints.push_back(
        {config.epochs, std::vector<double>(model.parameters().begin(),
                                            model.parameters().end())});
  }
  return checkpoints;
}

int SelectBestEpoch(const std::map<int, double>& h_avg_by_epoch) {
  if (h_avg_by_epoch.empty()) throw ValidationError("no epochs to choose from");
  int best = h_avg_by_epoch.begin()->first;
  double best_h = h_avg_by_epoch.begin()->second;
  for (const auto& [epoch, h] : h_avg_by_epoch) {
    if (h > best_h) {
      best = epoch;
      best_h = h;
    }
  }
  return best;
}

}  // namespace sepslab
