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

#include "sepslab/tiny_transformer.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "sepslab/errors.h"
#include "sepslab/kernels.h"
#include "sepslab/rng.h"

namespace sepslab {
namespace {

namespace k = kernels::parallel;

constexpr double kInitStd = 0.02;

std::span<const double> Slice(std::span<const double> v, size_t offset,
                              size_t n) {
  return v.subspan(offset, n);
}
std::span<double> Slice(std::span<double> v, size_t offset, size_t n) {
  return v.subspan(offset, n);
}

}  // namespace

void TransformerConfig::Validate() const {
  if (vocab_size <= 0 || max_context <= 0 || d_model <= 0 || n_heads <= 0 ||
      n_layers <= 0 || d_ff <= 0) {
    throw ValidationError("transformer sizes must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ValidationError("d_model must be divisible by n_heads");
  }
}

ParameterLayout::ParameterLayout(const TransformerConfig& c) {
  const size_t d = c.d_model;
  const size_t f = c.d_ff;
  size_t at = 0;
  auto take = [&at](size_t n) {
    const size_t start = at;
    at += n;
    return start;
  };
  token_embedding = take(static_cast<size_t>(c.vocab_size) * d);
  position_embedding = take(static_cast<size_t>(c.max_context) * d);
  for (int l = 0; l < c.n_layers; ++l) {
    Layer layer{};
    layer.ln1_gamma = take(d);
    layer.ln1_beta = take(d);
    layer.w_qkv = take(3 * d * d);
    layer.b_qkv = take(3 * d);
    layer.w_out = take(d * d);
    layer.b_out = take(d);
    layer.ln2_gamma = take(d);
    layer.ln2_beta = take(d);
    layer.w_fc = take(f * d);
    layer.b_fc = take(f);
    layer.w_proj = take(d * f);
    layer.b_proj = take(d);
    layers.push_back(layer);
  }
  lnf_gamma = take(d);
  lnf_beta = take(d);
  total = at;
}

TinyTransformer::TinyTransformer(TransformerConfig config, Tokenizer tokenizer,
                                 uint64_t init_seed)
    : config_(config),
      tokenizer_(std::move(tokenizer)),
      layout_((config_.Validate(), config_)) {
  if (tokenizer_.vocab_size() != config_.vocab_size) {
    throw ValidationError("tokenizer and config disagree on vocabulary size");
  }
  parameters_.assign(layout_.total, 0.0);
  Rng rng = SubStream(init_seed, "init");
  std::normal_distribution<double> normal(0.0, kInitStd);
  std::normal_distribution<double> residual(
      0.0, kInitStd / std::sqrt(2.0 * config_.n_layers));
  const size_t d = config_.d_model;
  const size_t f = config_.d_ff;
  auto fill = [&](size_t offset, size_t n, auto& dist) {
    for (size_t i = 0; i < n; ++i) parameters_[offset + i] = dist(rng);
  };
  auto ones = [&](size_t offset, size_t n) {
    std::fill_n(parameters_.begin() + offset, n, 1.0);
  };
  fill(layout_.token_embedding, config_.vocab_size * d, normal);
  fill(layout_.position_embedding, config_.max_context * d, normal);
  for (const auto& layer : layout_.layers) {
    ones(layer.ln1_gamma, d);
    fill(layer.w_qkv, 3 * d * d, normal);
    fill(layer.w_out, d * d, residual);
    ones(layer.ln2_gamma, d);
    fill(layer.w_fc, f * d, normal);
    fill(layer.w_proj, d * f, residual);
  }
  ones(layout_.lnf_gamma, d);
}

TinyTransformer::TinyTransformer(TransformerConfig config, Tokenizer tokenizer,
                                 std::vector<double> parameters)
    : config_(config),
      tokenizer_(std::move(tokenizer)),
      layout_((config_.Validate(), config_)),
      parameters_(std::move(parameters)) {
  if (tokenizer_.vocab_size() != config_.vocab_size) {
    throw ValidationError("tokenizer and config disagree on vocabulary size");
  }
  if (parameters_.size() != layout_.total) {
    throw ValidationError("expected " + std::to_string(layout_.total) +
                          " parameters, got " +
                          std::to_string(parameters_.size()));
  }
}

void TinyTransformer::SetParameters(std::span<const double> values) {
  if (values.size() != parameters_.size()) {
    throw ValidationError("parameter vector has the wrong length");
  }
  std::copy(values.begin(), values.end(), parameters_.begin());
}

void TinyTransformer::CheckIds(std::span<const int> ids) const {
  if (static_cast<int>(ids.size()) > config_.max_context) {
    throw ContextOverflowError(static_cast<int>(ids.size()),
                               config_.max_context);
  }
  for (int id : ids) {
    if (id < 0 || id >= config_.vocab_size) {
      throw CodecError("token id " + std::to_string(id) + " is out of range");
    }
  }
}

void TinyTransformer::Forward(std::span<const int> ids,
                              ForwardCache& cache) const {
  CheckIds(ids);
  const int t_len = static_cast<int>(ids.size());
  const int d = config_.d_model;
  const int f = config_.d_ff;
  const int v = config_.vocab_size;
  const int h = config_.n_heads;
  std::span<const double> p = parameters_;
  const size_t td = static_cast<size_t>(t_len) * d;

  cache.ids.assign(ids.begin(), ids.end());
  cache.layers.resize(config_.n_layers);

  std::vector<double> x(td);
  for (int t = 0; t < t_len; ++t) {
    const double* te =
        &p[layout_.token_embedding + static_cast<size_t>(ids[t]) * d];
    const double* pe =
        &p[layout_.position_embedding + static_cast<size_t>(t) * d];
    for (int i = 0; i < d; ++i)
      x[static_cast<size_t>(t) * d + i] = te[i] + pe[i];
  }

  for (int l = 0; l < config_.n_layers; ++l) {
    const auto& w = layout_.layers[l];
    auto& c = cache.layers[l];
    c.input = x;
    c.ln1.resize(td);
    c.ln1_mean.resize(t_len);
    c.ln1_rstd.resize(t_len);
    k::LayerNorm(c.input, Slice(p, w.ln1_gamma, d), Slice(p, w.ln1_beta, d),
                 c.ln1, c.ln1_mean, c.ln1_rstd, t_len, d);
    c.qkv.resize(td * 3);
    k::Linear(c.ln1, Slice(p, w.w_qkv, 3 * d * d), Slice(p, w.b_qkv, 3 * d),
              c.qkv, t_len, d, 3 * d);
    c.probs.resize(static_cast<size_t>(h) * t_len * t_len);
    c.attn.resize(td);
    k::CausalAttention(c.qkv, c.probs, c.attn, t_len, d, h);
    c.mid.resize(td);
    k::Linear(c.attn, Slice(p, w.w_out, d * d), Slice(p, w.b_out, d), c.mid,
              t_len, d, d);
    for (size_t i = 0; i < td; ++i) c.mid[i] += c.input[i];
    c.ln2.resize(td);
    c.ln2_mean.resize(t_len);
    c.ln2_rstd.resize(t_len);
    k::LayerNorm(c.mid, Slice(p, w.ln2_gamma, d), Slice(p, w.ln2_beta, d),
                 c.ln2, c.ln2_mean, c.ln2_rstd, t_len, d);
    c.fc_pre.resize(static_cast<size_t>(t_len) * f);
    k::Linear(c.ln2, Slice(p, w.w_fc, static_cast<size_t>(f) * d),
              Slice(p, w.b_fc, f), c.fc_pre, t_len, d, f);
    c.fc_act.resize(c.fc_pre.size());
    k::Gelu(c.fc_pre, c.fc_act);
    k::Linear(c.fc_act, Slice(p, w.w_proj, static_cast<size_t>(d) * f),
              Slice(p, w.b_proj, d), x, t_len, f, d);
    for (size_t i = 0; i < td; ++i) x[i] += c.mid[i];
  }

  cache.final_input = x;
  cache.lnf.resize(td);
  cache.lnf_mean.resize(t_len);
  cache.lnf_rstd.resize(t_len);
  k::LayerNorm(cache.final_input, Slice(p, layout_.lnf_gamma, d),
               Slice(p, layout_.lnf_beta, d), cache.lnf, cache.lnf_mean,
               cache.lnf_rstd, t_len, d);
  cache.logits.resize(static_cast<size_t>(t_len) * v);
  k::Linear(cache.lnf,
            Slice(p, layout_.token_embedding, static_cast<size_t>(v) * d), {},
            cache.logits, t_len, d, v);
  cache.log_probs.resize(cache.logits.size());
  k::LogSoftmaxRows(cache.logits, cache.log_probs, t_len, v);
}

void TinyTransformer::Backward(const ForwardCache& cache,
                               std::span<const double> dlogits,
                               std::span<double> grad) const {
  const int t_len = cache.length();
  const int d = config_.d_model;
  const int f = config_.d_ff;
  const int v = config_.vocab_size;
  const int h = config_.n_heads;
  const size_t td = static_cast<size_t>(t_len) * d;
  std::span<const double> p = parameters_;
  if (grad.size() != parameters_.size()) {
    throw ValidationError("gradient buffer has the wrong length");
  }

  std::vector<double> dlnf(td, 0.0);
  k::LinearBackward(
      cache.lnf, Slice(p, layout_.token_embedding, static_cast<size_t>(v) * d),
      dlogits, dlnf,
      Slice(grad, layout_.token_embedding, static_cast<size_t>(v) * d), {},
      t_len, d, v);
  std::vector<double> dx(td, 0.0);
  k::LayerNormBackward(cache.final_input, Slice(p, layout_.lnf_gamma, d),
                       cache.lnf_mean, cache.lnf_rstd, dlnf, dx,
                       Slice(grad, layout_.lnf_gamma, d),
                       Slice(grad, layout_.lnf_beta, d), t_len, d);

  std::vector<double> dmid(td), dln2(td), dfc_act, dfc_pre, dattn(td), dqkv,
      dln1(td);
  for (int l = config_.n_layers - 1; l >= 0; --l) {
    const auto& w = layout_.layers[l];
    const auto& c = cache.layers[l];
    // x_out = mid + proj(gelu(fc(ln2(mid))))
    dmid = dx;
    dfc_act.assign(static_cast<size_t>(t_len) * f, 0.0);
    k::LinearBackward(c.fc_act, Slice(p, w.w_proj, static_cast<size_t>(d) * f),
                      dx, dfc_act,
                      Slice(grad, w.w_proj, static_cast<size_t>(d) * f),
                      Slice(grad, w.b_proj, d), t_len, f, d);
    dfc_pre.assign(dfc_act.size(), 0.0);
    k::GeluBackward(c.fc_pre, dfc_act, dfc_pre);
    std::fill(dln2.begin(), dln2.end(), 0.0);
    k::LinearBackward(c.ln2, Slice(p, w.w_fc, static_cast<size_t>(f) * d),
                      dfc_pre, dln2,
                      Slice(grad, w.w_fc, static_cast<size_t>(f) * d),
                      Slice(grad, w.b_fc, f), t_len, d, f);
    k::LayerNormBackward(c.mid, Slice(p, w.ln2_gamma, d), c.ln2_mean,
                         c.ln2_rstd, dln2, dmid, Slice(grad, w.ln2_gamma, d),
                         Slice(grad, w.ln2_beta, d), t_len, d);
    // mid = input + out(attn(qkv(ln1(input))))
    dx = dmid;
    std::fill(dattn.begin(), dattn.end(), 0.0);
    k::LinearBackward(c.attn, Slice(p, w.w_out, static_cast<size_t>(d) * d),
                      dmid, dattn,
                      Slice(grad, w.w_out, static_cast<size_t>(d) * d),
                      Slice(grad, w.b_out, d), t_len, d, d);
    dqkv.assign(td * 3, 0.0);
    k::CausalAttentionBackward(c.qkv, c.probs, dattn, dqkv, t_len, d, h);
    std::fill(dln1.begin(), dln1.end(), 0.0);
    k::LinearBackward(c.ln1, Slice(p, w.w_qkv, static_cast<size_t>(3) * d * d),
                      dqkv, dln1,
                      Slice(grad, w.w_qkv, static_cast<size_t>(3) * d * d),
                      Slice(grad, w.b_qkv, 3 * d), t_len, d, 3 * d);
    k::LayerNormBackward(c.input, Slice(p, w.ln1_gamma, d), c.ln1_mean,
                         c.ln1_rstd, dln1, dx, Slice(grad, w.ln1_gamma, d),
                         Slice(grad, w.ln1_beta, d), t_len, d);
  }

  for (int t = 0; t < t_len; ++t) {
    double* te =
        &grad[layout_.token_embedding + static_cast<size_t>(cache.ids[t]) * d];
    double* pe = &grad[layout_.position_embedding + static_cast<size_t>(t) * d];
    for (int i = 0; i < d; ++i) {
      te[i] += dx[static_cast<size_t>(t) * d + i];
      pe[i] += dx[static_cast<size_t>(t) * d + i];
    }
  }
}

std::vector<double> TinyTransformer::TokenLogProbs(
    std::span<const int> ids) const {
  CheckIds(ids);
  if (ids.size() <= 1) return {};
  ForwardCache cache;
  Forward(ids, cache);
  const int v = config_.vocab_size;
  std::vector<double> out(ids.size() - 1);
  for (size_t i = 1; i < ids.size(); ++i) {
    out[i - 1] = cache.log_probs[(i - 1) * v + ids[i]];
  }
  return out;
}

std::vector<double> TinyTransformer::NextTokenLogProbs(
    std::span<const int> prefix) const {
  if (prefix.empty()) throw CodecError("cannot condition on an empty prefix");
  ForwardCache cache;
  Forward(prefix, cache);
  const size_t v = config_.vocab_size;
  const auto row = cache.log_probs.begin() + (prefix.size() - 1) * v;
  return {row, row + v};
}

std::vector<int> TinyTransformer::GenerateIds(std::span<const int> prefix,
                                              int max_new_tokens) const {
  CheckIds(prefix);
  if (prefix.empty()) throw CodecError("cannot generate from an empty prefix");
  std::vector<int> generated;
  if (max_new_tokens <= 0) return generated;

  const int d = config_.d_model;
  const int f = config_.d_ff;
  const int v = config_.vocab_size;
  const int h = config_.n_heads;
  const int ctx = config_.max_context;
  std::span<const double> p = parameters_;
  std::vector<std::vector<double>> k_cache(
      config_.n_layers, std::vector<double>(static_cast<size_t>(ctx) * d));
  std::vector<std::vector<double>> v_cache = k_cache;
  std::vector<double> x(d), ln(d), qkv(3 * d), attn(d), mid(d), fc(f), act(f),
      out(d), logits(v), mean(1), rstd(1);

  // Runs one token through the network at `pos` and leaves the next-token
  // logits in `logits`.
  auto step = [&](int token, int pos) {
    for (int i = 0; i < d; ++i) {
      x[i] = p[layout_.token_embedding + static_cast<size_t>(token) * d + i] +
             p[layout_.position_embedding + static_cast<size_t>(pos) * d + i];
    }
    for (int l = 0; l < config_.n_layers; ++l) {
      const auto& w = layout_.layers[l];
      kernels::serial::LayerNorm(x, Slice(p, w.ln1_gamma, d),
                                 Slice(p, w.ln1_beta, d), ln, mean, rstd, 1, d);
      k::Linear(ln, Slice(p, w.w_qkv, static_cast<size_t>(3) * d * d),
                Slice(p, w.b_qkv, 3 * d), qkv, 1, d, 3 * d);
      std::copy_n(qkv.begin() + d, d,
                  k_cache[l].begin() + static_cast<size_t>(pos) * d);
      std::copy_n(qkv.begin() + 2 * d, d,
                  v_cache[l].begin() + static_cast<size_t>(pos) * d);
      k::AttentionStep(std::span<const double>(qkv).first(d), k_cache[l],
                       v_cache[l], attn, pos + 1, d, h);
      k::Linear(attn, Slice(p, w.w_out, static_cast<size_t>(d) * d),
                Slice(p, w.b_out, d), mid, 1, d, d);
      for (int i = 0; i < d; ++i) mid[i] += x[i];
      kernels::serial::LayerNorm(mid, Slice(p, w.ln2_gamma, d),
                                 Slice(p, w.ln2_beta, d), ln, mean, rstd, 1, d);
      k::Linear(ln, Slice(p, w.w_fc, static_cast<size_t>(f) * d),
                Slice(p, w.b_fc, f), fc, 1, d, f);
      kernels::serial::Gelu(fc, act);
      k::Linear(act, Slice(p, w.w_proj, static_cast<size_t>(d) * f),
                Slice(p, w.b_proj, d), out, 1, f, d);
      for (int i = 0; i < d; ++i) x[i] = out[i] + mid[i];
    }
    kernels::serial::LayerNorm(x, Slice(p, layout_.lnf_gamma, d),
                               Slice(p, layout_.lnf_beta, d), ln, mean, rstd, 1,
                               d);
    k::Linear(ln, Slice(p, layout_.token_embedding, static_cast<size_t>(v) * d),
              {}, logits, 1, d, v);
  };

  int pos = 0;
  for (int token : prefix) step(token, pos++);
  // The output is capped so that prefix plus continuation still fits the
  // context and can be scored as one sequence.
  while (static_cast<int>(generated.size()) < max_new_tokens && pos < ctx) {
    // First maximum wins ties.
    const int next = static_cast<int>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (next == Tokenizer::kEndOfSequenceId) break;
    generated.push_back(next);
    step(next, pos++);
  }
  return generated;
}

std::string TinyTransformer::GenerateGreedy(std::string_view prefix,
                                            int max_new_tokens) const {
  const std::vector<int> ids = tokenizer_.Encode(prefix);
  return tokenizer_.Decode(GenerateIds(ids, max_new_tokens));
}

std::vector<std::string> TinyTransformer::GenerateGreedyBatch(
    const std::vector<std::string>& prefixes, int max_new_tokens) const {
  std::vector<std::string> out(prefixes.size());
  std::vector<std::exception_ptr> errors(prefixes.size());
  const long n = static_cast<long>(prefixes.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = GenerateGreedy(prefixes[i], max_new_tokens);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::unique_ptr<LanguageModel> TinyTransformer::CloneFrozen() const {
  return std::make_unique<TinyTransformer>(*this);
}

}  // namespace sepslab
