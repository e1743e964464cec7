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

#include "sepslab/language_model.h"

#include "sepslab/errors.h"

namespace sepslab {

std::string_view SegmentName(Segment s) {
  switch (s) {
    case Segment::kScaffold:
      return "scaffold";
    case Segment::kRetainQuestion:
      return "retain_question";
    case Segment::kForgetQuestion:
      return "forget_question";
    case Segment::kRetainAnswer:
      return "retain_answer";
    case Segment::kForgetAnswer:
      return "forget_answer";
  }
  return "unknown";
}

void TokenSequence::Append(std::span<const int> more, Segment label) {
  ids.insert(ids.end(), more.begin(), more.end());
  labels.insert(labels.end(), more.size(), label);
}

void TokenSequence::Validate() const {
  if (ids.size() != labels.size()) {
    throw ValidationError("token sequence has " + std::to_string(ids.size()) +
                          " ids but " + std::to_string(labels.size()) +
                          " labels");
  }
}

std::vector<std::string> LanguageModel::GenerateGreedyBatch(
    const std::vector<std::string>& prefixes, int max_new_tokens) const {
  std::vector<std::string> out;
  out.reserve(prefixes.size());
  for (const auto& p : prefixes)
    out.push_back(GenerateGreedy(p, max_new_tokens));
  return out;
}

std::unique_ptr<LanguageModel> LanguageModel::CloneFrozen() const {
  throw UnsupportedOperationError("this model cannot be cloned locally");
}

}  // namespace sepslab
