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

// A small pre-LayerNorm GPT-style decoder in double precision with a
// hand-written backward pass. The output head is tied to the token
// embedding. All parameters live in one flat vector so optimizers, task
// arithmetic and checkpoints can treat the model as a point in R^n.

#ifndef SEPSLAB_TINY_TRANSFORMER_H_
#define SEPSLAB_TINY_TRANSFORMER_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sepslab/language_model.h"
#include "sepslab/tokenizer.h"

namespace sepslab {

struct TransformerConfig {
  int vocab_size = 0;
  int max_context = 512;
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 256;

  bool operator==(const TransformerConfig&) const = default;
  // Throws ValidationError for non-positive sizes or d_model % n_heads != 0.
  void Validate() const;
};

// Offsets of each tensor inside the flat parameter vector.
struct ParameterLayout {
  struct Layer {
    size_t ln1_gamma, ln1_beta, w_qkv, b_qkv, w_out, b_out;
    size_t ln2_gamma, ln2_beta, w_fc, b_fc, w_proj, b_proj;
  };
  size_t token_embedding = 0;
  size_t position_embedding = 0;
  std::vector<Layer> layers;
  size_t lnf_gamma = 0;
  size_t lnf_beta = 0;
  size_t total = 0;

  explicit ParameterLayout(const TransformerConfig& config);
};

// Activations kept from a forward pass for the backward pass.
struct ForwardCache {
  struct Layer {
    std::vector<double> input, ln1, ln1_mean, ln1_rstd, qkv, probs, attn, mid,
        ln2, ln2_mean, ln2_rstd, fc_pre, fc_act;
  };
  std::vector<int> ids;
  std::vector<Layer> layers;
  std::vector<double> final_input, lnf, lnf_mean, lnf_rstd;
  std::vector<double> logits;     // [T x V]
  std::vector<double> log_probs;  // [T x V], row t predicts token t + 1

  int length() const { return static_cast<int>(ids.size()); }
};

class TinyTransformer : public LanguageModel {
 public:
  // Random initialization from `init_seed`.
  TinyTransformer(TransformerConfig config, Tokenizer tokenizer,
                  uint64_t init_seed);
  // Explicit parameters; throws ValidationError on a size mismatch.
  TinyTransformer(TransformerConfig config, Tokenizer tokenizer,
                  std::vector<double> parameters);

  const Tokenizer& tokenizer() const override { return tokenizer_; }
  int max_context() const override { return config_.max_context; }
  std::vector<double> TokenLogProbs(std::span<const int> ids) const override;
  using LanguageModel::TokenLogProbs;
  std::vector<double> NextTokenLogProbs(
      std::span<const int> prefix) const override;
  std::string GenerateGreedy(std::string_view prefix,
                             int max_new_tokens) const override;
  std::vector<std::string> GenerateGreedyBatch(
      const std::vector<std::string>& prefixes,
      int max_new_tokens) const override;
  std::unique_ptr<LanguageModel> CloneFrozen() const override;
  std::span<const double> parameters() const override { return parameters_; }

  std::span<double> mutable_parameters() { return parameters_; }
  void SetParameters(std::span<const double> values);
  size_t num_parameters() const { return parameters_.size(); }
  const TransformerConfig& config() const { return config_; }
  const ParameterLayout& layout() const { return layout_; }

  // Full forward pass; validates ids against vocabulary and context.
  void Forward(std::span<const int> ids, ForwardCache& cache) const;
  // Accumulates dLoss/dtheta into `grad` given dLoss/dlogits ([T x V]).
  void Backward(const ForwardCache& cache, std::span<const double> dlogits,
                std::span<double> grad) const;
  // Greedy continuation in token space using an incremental key/value cache.
  // Returns the generated ids without the terminating end-of-sequence token.
  std::vector<int> GenerateIds(std::span<const int> prefix,
                               int max_new_tokens) const;

 private:
  void CheckIds(std::span<const int> ids) const;

  TransformerConfig config_;
  Tokenizer tokenizer_;
  ParameterLayout layout_;
  std::vector<double> parameters_;
};

}  // namespace sepslab

#endif  // SEPSLAB_TINY_TRANSFORMER_H_
