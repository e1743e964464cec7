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

// Evaluation suites over a split: single-question MU/FE components, mixed
// two-question separability, and the multi-question stress grid.

#ifndef SEPSLAB_EVALUATION_H_
#define SEPSLAB_EVALUATION_H_

#include <cstdint>
#include <string>

#include "sepslab/dataset.h"
#include "sepslab/judge.h"
#include "sepslab/language_model.h"
#include "sepslab/metrics.h"
#include "sepslab/scoring.h"

namespace sepslab {

enum class Suite { kSingle, kMixed, kStress };

// Throws UsageError for anything other than single, mixed or stress.
Suite ParseSuite(std::string_view name);
std::string SuiteName(Suite suite);

enum class StressFormat {
  kInstruction,  // bracket-numbered instruction template
  kNumbered,     // the "N. question" layout used for training prompts
};

struct EvalConfig {
  uint64_t seed = 0;
  // Retain pairs sampled for the single suite's MU components.
  int retain_sample = 40;
  // Forget pairs used to build mixed prompts; 0 means all.
  int mixed_pairs = 0;
  // Generation budget per answer slot.
  int max_new_tokens_per_slot = 40;
  // Compare mixed-slot cosine against ground truth instead of the
  // reference model's single-question answer.
  bool cosine_against_ground_truth = false;
  StressFormat stress_format = StressFormat::kInstruction;
  JudgeOptions judge;
  // Fraction of failed judge calls above which a report is incomplete.
  double max_judge_failure_rate = 0.1;
};

// `ref` supplies cosine reference answers for the mixed suite; when null,
// ground truth is used. Missing or unparseable slot answers score 0.
ScoreReport EvaluateSuite(const LanguageModel& model, const LanguageModel* ref,
                          const UnlearnSplit& split, const JudgeClient& judge,
                          const Embedder& embedder, Suite suite,
                          const EvalConfig& config);

}  // namespace sepslab

#endif  // SEPSLAB_EVALUATION_H_
