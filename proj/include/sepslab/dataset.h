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

// TOFU-style question-answer corpora, the forget/retain partition, and the
// refusal pool used by targeted unlearning.

#ifndef SEPSLAB_DATASET_H_
#define SEPSLAB_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sepslab/rng.h"

namespace sepslab {

struct QAPair {
  std::string id;
  std::string question;
  std::string answer;
  std::string paraphrased_answer;              // empty when absent
  std::vector<std::string> perturbed_answers;  // empty when absent

  bool operator==(const QAPair&) const = default;
  // Throws ValidationError on an empty question/answer or repeated
  // perturbed answers.
  void Validate() const;
};

struct UnlearnSplit {
  std::vector<QAPair> forget;
  std::vector<QAPair> retain;
  std::vector<std::string> idk_pool;
  uint64_t seed = 0;

  bool operator==(const UnlearnSplit&) const = default;
  // Disjoint ids, valid pairs.
  void Validate() const;
  // Additionally requires a non-empty forget set and, for targeted methods,
  // a non-empty refusal pool.
  void ValidateForUnlearning(bool targeted) const;
  // Stable content hash over every field, hex encoded.
  std::string Hash() const;
};

// Refusal strings observed in the paper's qualitative outputs.
std::vector<std::string> DefaultIdkPool();

// Reads the JSON-lines format: a header line
// {"forget_ids": [...], "idk_pool": [...], "seed": n, ...} followed by one
// QA record per line. Throws ParseError (with 1-based line) or
// ValidationError.
UnlearnSplit LoadSplit(const std::string& path);
// Writes the header, then retain records, then forget records in order.
void SaveSplit(const UnlearnSplit& split, const std::string& path);

struct CorpusSpec {
  int num_entities = 200;
  int qa_per_entity = 20;
  double forget_fraction = 0.01;
  int num_perturbed = 3;
  uint64_t seed = 0;
};

// Seeded fictitious-author corpus. The forget set is the last
// round(forget_fraction * total) pairs. Throws ValidationError when that
// rounds to zero or qa_per_entity exceeds the number of attribute templates.
UnlearnSplit SynthesizeCorpus(const CorpusSpec& spec);
int MaxQaPerEntity();

// Uniform draw from the refusal pool; throws ValidationError when empty.
const std::string& SampleIdk(const UnlearnSplit& split, Rng& rng);

}  // namespace sepslab

#endif  // SEPSLAB_DATASET_H_
