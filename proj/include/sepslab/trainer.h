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

// Reference fine-tuning and unlearning loops: AdamW with decoupled weight
// decay, a linear warmup over the first epoch followed by linear decay, and
// gradient accumulation over micro-batches.

#ifndef SEPSLAB_TRAINER_H_
#define SEPSLAB_TRAINER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sepslab/dataset.h"
#include "sepslab/losses.h"
#include "sepslab/tiny_transformer.h"

namespace sepslab {

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  int effective_batch = 32;
  // Items per accumulation step; 0 means the whole effective batch.
  int micro_batch = 0;
  int epochs = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t seed = 0;
  std::vector<int> checkpoint_epochs = {5, 10};
  // Reference fine-tuning only: two-question prompts added per epoch, as a
  // fraction of the corpus size.
  double mixed_prompt_ratio = 0.5;

  // Throws ValidationError on non-positive rate, epochs or batch sizes.
  void Validate() const;
};

// Linear 0 -> peak over [0, steps_per_epoch], then peak -> 0 at total_steps.
// Runs of at most one epoch warm up over their first half instead.
// Throws ValidationError when step is outside [0, total_steps].
double LrAt(int step, int total_steps, int steps_per_epoch, double peak);

class AdamW {
 public:
  AdamW(size_t num_parameters, const TrainConfig& config);
  // theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta).
  void Step(std::span<double> theta, std::span<const double> grad, double lr);
  int steps() const { return steps_; }

 private:
  double beta1_, beta2_, epsilon_, weight_decay_;
  std::vector<double> m_, v_;
  int steps_ = 0;
};

// Per-epoch statistics passed to observers. Fine-tuning ends after the
// current epoch when an observer sets `stop`.
struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  bool stop = false;
};

using EpochObserver = std::function<void(const TinyTransformer&, EpochStats&)>;

// One optimizer step on `batch` with gradient accumulation over
// micro-batches; returns the batch-mean cross-entropy before the update.
double NllStep(TinyTransformer& model, AdamW& optimizer,
               std::span<const TokenSequence> batch, int micro_batch,
               double lr);

// Teaches the model every pair of the split (forget and retain) as single
// prompts plus seeded two-question prompts. Returns the mean loss per epoch.
std::vector<double> Finetune(TinyTransformer& model, const UnlearnSplit& split,
                             const TrainConfig& config,
                             const EpochObserver& observer = nullptr);

struct Checkpoint {
  int epoch = 0;
  std::vector<double> parameters;
};

// Unlearns the split's forget set starting from `model` (a copy of `ref`).
// Each step pairs a forget batch with an equally sized retain batch. Task
// arithmetic instead reinforces a copy on the forget set for `epochs` and
// returns a single checkpoint tagged with the final epoch. Throws
// DivergenceError on a non-finite loss; checkpoints already handed to the
// observer stay valid.
std::vector<Checkpoint> RunUnlearning(TinyTransformer& model,
                                      const TinyTransformer& ref,
                                      const UnlearnSplit& split,
                                      const LossConfig& loss_config,
                                      const TrainConfig& train_config,
                                      const EpochObserver& observer = nullptr);

// Epoch with the largest H-Avg; ties go to the earlier epoch. Throws
// ValidationError on an empty map.
int SelectBestEpoch(const std::map<int, double>& h_avg_by_epoch);

}  // namespace sepslab

#endif  // SEPSLAB_TRAINER_H_
