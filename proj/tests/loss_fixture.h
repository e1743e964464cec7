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

// Batches for every unlearning loss on a small corpus, plus a
// finite-difference checker. Shared by the unit and acceptance tests.

#ifndef SEPSLAB_TESTS_LOSS_FIXTURE_H_
#define SEPSLAB_TESTS_LOSS_FIXTURE_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sepslab/losses.h"
#include "sepslab/pipeline.h"
#include "sepslab/prompt_composer.h"
#include "test_util.h"

namespace sepslab::testing {

using LossFn = std::function<double(const TinyTransformer&, Grad)>;

struct LossFixture {
  UnlearnSplit split;
  Tokenizer codec;
  std::vector<TokenSequence> forget, retain, forget_idk;
  std::vector<PreferencePair> dpo, ap;
  std::vector<MixedPromptPair> mixed, mixed_idk;

  LossFixture()
      : split(SmallSplit(8, 4, 0.25)), codec(BuildCorpusTokenizer(split)) {
    const std::string& idk = split.idk_pool.front();
    for (size_t i = 0; i < 2; ++i) {
      const QAPair& f = split.forget[i];
      const QAPair& r = split.retain[i];
      auto single = [&](const QAPair& p, SlotRole role,
                        std::optional<std::string> answer) {
        return ComposeMixed({{role, &p}}, codec, {std::move(answer)}).tokens;
      };
      forget.push_back(single(f, SlotRole::kForget, std::nullopt));
      retain.push_back(single(r, SlotRole::kRetain, std::nullopt));
      forget_idk.push_back(single(f, SlotRole::kForget, idk));
      dpo.push_back({forget_idk.back(), forget.back()});
      ap.push_back({single(r, SlotRole::kRetain, idk), retain.back()});
      mixed.push_back(
          {ComposeMixed({{SlotRole::kRetain, &r}, {SlotRole::kForget, &f}},
                        codec),
           ComposeMixed({{SlotRole::kForget, &f}, {SlotRole::kRetain, &r}},
                        codec)});
      mixed_idk.push_back(
          {ComposeMixed({{SlotRole::kRetain, &r}, {SlotRole::kForget, &f}},
                        codec, {std::nullopt, idk}),
           ComposeMixed({{SlotRole::kForget, &f}, {SlotRole::kRetain, &r}},
                        codec, {idk, std::nullopt})});
    }
  }

  TinyTransformer Model(uint64_t seed, double sharpen) const {
    TinyTransformer m = SmallModel(seed, codec, 8, 1, 64);
    if (sharpen > 0) Sharpen(m, seed + 100, sharpen);
    return m;
  }

  // The ten differentiable losses, bound to this fixture's batches. `ref`
  // must outlive the returned functions.
  std::map<std::string, LossFn> Losses(const TinyTransformer& ref,
                                       double beta = 0.1) const {
    return {
        {"GA", [this](const TinyTransformer& m,
                      Grad g) { return LossGa(m, forget, g); }},
        {"NPO",
         [this, &ref, beta](const TinyTransformer& m, Grad g) {
           return LossNpo(m, ref, forget, beta, g);
         }},
        {"ME", [this](const TinyTransformer& m,
                      Grad g) { return LossMe(m, forget, true, g); }},
        {"IDK", [this](const TinyTransformer& m,
                       Grad g) { return LossIdk(m, forget_idk, g); }},
        {"DPO",
         [this, &ref, beta](const TinyTransformer& m, Grad g) {
           return LossDpo(m, ref, dpo, beta, g);
         }},
        {"GD", [this](const TinyTransformer& m,
                      Grad g) { return LossGd(m, retain, g); }},
        {"KL", [this, &ref](const TinyTransformer& m,
                            Grad g) { return LossKl(m, ref, retain, g); }},
        {"AP", [this, beta](const TinyTransformer& m,
                            Grad g) { return LossAp(m, ap, beta, g); }},
        {"MP-ME", [this, &ref](const TinyTransformer& m,
                               Grad g) { return LossMpMe(m, ref, mixed, g); }},
        {"MP-IDK", [this](const TinyTransformer& m,
                          Grad g) { return LossMpIdk(m, mixed_idk, g); }},
    };
  }
};

// Largest relative error between the analytic directional derivative and a
// central difference over `directions` random unit directions.
inline double MaxGradientError(const TinyTransformer& model, const LossFn& loss,
                               int directions, uint64_t seed,
                               double step = 1e-5) {
  std::vector<double> grad(model.num_parameters(), 0.0);
  loss(model, grad);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  TinyTransformer probe = model;
  const std::vector<double> theta(model.parameters().begin(),
                                  model.parameters().end());
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    std::vector<double> v(theta.size());
    double norm = 0.0;
    for (double& x : v) {
      x = normal(gen);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    double analytic = 0.0;
    for (size_t i = 0; i < v.size(); ++i) analytic += grad[i] * (v[i] /= norm);
    std::vector<double> shifted(theta);
    for (size_t i = 0; i < v.size(); ++i) shifted[i] = theta[i] + step * v[i];
    probe.SetParameters(shifted);
    const double plus = loss(probe, {});
    for (size_t i = 0; i < v.size(); ++i) shifted[i] = theta[i] - step * v[i];
    probe.SetParameters(shifted);
    const double minus = loss(probe, {});
    const double numeric = (plus - minus) / (2 * step);
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

}  // namespace sepslab::testing

#endif  // SEPSLAB_TESTS_LOSS_FIXTURE_H_
