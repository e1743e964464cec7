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

// LanguageModel over a JSON-over-HTTP model server.
//
// Protocol (all POST, JSON bodies):
//   /info      {}                               -> {max_context, pieces}
//   /logprobs  {prefix: [ids]}                  -> {next: [K log-probs]}
//   /logprobs  {prefix: [ids], continuation: [ids]}
//                                               -> {token_logprobs: [L-1]}
//   /generate  {prefix: text, max_new_tokens}   -> {text}
// Failures use a non-2xx status with {error: {kind, message}}, where kind is
// one of context_overflow, codec, validation or internal.

#ifndef SEPSLAB_REMOTE_MODEL_H_
#define SEPSLAB_REMOTE_MODEL_H_

#include "sepslab/http.h"
#include "sepslab/language_model.h"

namespace sepslab {

class RemoteModel : public LanguageModel {
 public:
  // Fetches the tokenizer table and context size from /info.
  explicit RemoteModel(HttpEndpoint endpoint);

  const Tokenizer& tokenizer() const override { return codec_; }
  int max_context() const override { return max_context_; }
  std::vector<double> TokenLogProbs(std::span<const int> ids) const override;
  using LanguageModel::TokenLogProbs;
  std::vector<double> NextTokenLogProbs(
      std::span<const int> prefix) const override;
  std::string GenerateGreedy(std::string_view prefix,
                             int max_new_tokens) const override;

 private:
  nlohmann::json Call(const std::string& path,
                      const nlohmann::json& body) const;

  HttpEndpoint endpoint_;
  Tokenizer codec_;
  int max_context_ = 0;
};

}  // namespace sepslab

#endif  // SEPSLAB_REMOTE_MODEL_H_
