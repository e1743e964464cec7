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

// Dense kernels behind the toy transformer.
//
// Every kernel exists twice with identical signatures: `serial` is the
// straightforward reference used by tests, `parallel` is the OpenMP version
// the model runs. All matrices are row-major. Backward kernels accumulate
// (+=) into their gradient outputs. Each output element of a parallel kernel
// is produced by exactly one thread in a fixed summation order, so results
// are independent of the thread count.

#ifndef SEPSLAB_KERNELS_H_
#define SEPSLAB_KERNELS_H_

#include <span>

namespace sepslab::kernels {

inline constexpr double kLayerNormEps = 1e-5;

namespace serial {

// y[rows x out] = x[rows x in] * w[out x in]^T + b. `b` may be empty.
void Linear(std::span<const double> x, std::span<const double> w,
            std::span<const double> b, std::span<double> y, int rows, int in,
            int out);
// dx += dy * w, dw += dy^T * x, db += column sums of dy. `dx`/`db` may be
// empty.
void LinearBackward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> dy, std::span<double> dx,
                    std::span<double> dw, std::span<double> db, int rows,
                    int in, int out);
// Saves per-row mean and reciprocal std for the backward pass.
void LayerNorm(std::span<const double> x, std::span<const double> gamma,
               std::span<const double> beta, std::span<double> y,
               std::span<double> mean, std::span<double> rstd, int rows,
               int dim);
void LayerNormBackward(std::span<const double> x, std::span<const double> gamma,
                       std::span<const double> mean,
                       std::span<const double> rstd, std::span<const double> dy,
                       std::span<double> dx, std::span<double> dgamma,
                       std::span<double> dbeta, int rows, int dim);
// tanh-approximated GELU.
void Gelu(std::span<const double> x, std::span<double> y);
void GeluBackward(std::span<const double> x, std::span<const double> dy,
                  std::span<double> dx);
// qkv is [T x 3d] laid out as [q | k | v]; probs is [heads x T x T] with the
// upper triangle left at zero; out is [T x d].
void CausalAttention(std::span<const double> qkv, std::span<double> probs,
                     std::span<double> out, int seq_len, int dim, int heads);
void CausalAttentionBackward(std::span<const double> qkv,
                             std::span<const double> probs,
                             std::span<const double> dout,
                             std::span<double> dqkv, int seq_len, int dim,
                             int heads);
// One query row against cached keys/values ([cached x d] each).
void AttentionStep(std::span<const double> q, std::span<const double> k_cache,
                   std::span<const double> v_cache, std::span<double> out,
                   int cached, int dim, int heads);
void LogSoftmaxRows(std::span<const double> logits, std::span<double> out,
                    int rows, int cols);

}  // namespace serial

namespace parallel {

void Linear(std::span<const double> x, std::span<const double> w,
            std::span<const double> b, std::span<double> y, int rows, int in,
            int out);
void LinearBackward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> dy, std::span<double> dx,
                    std::span<double> dw, std::span<double> db, int rows,
                    int in, int out);
void LayerNorm(std::span<const double> x, std::span<const double> gamma,
               std::span<const double> beta, std::span<double> y,
               std::span<double> mean, std::span<double> rstd, int rows,
               int dim);
void LayerNormBackward(std::span<const double> x, std::span<const double> gamma,
                       std::span<const double> mean,
                       std::span<const double> rstd, std::span<const double> dy,
                       std::span<double> dx, std::span<double> dgamma,
                       std::span<double> dbeta, int rows, int dim);
void Gelu(std::span<const double> x, std::span<double> y);
void GeluBackward(std::span<const double> x, std::span<const double> dy,
                  std::span<double> dx);
void CausalAttention(std::span<const double> qkv, std::span<double> probs,
                     std::span<double> out, int seq_len, int dim, int heads);
void CausalAttentionBackward(std::span<const double> qkv,
                             std::span<const double> probs,
                             std::span<const double> dout,
                             std::span<double> dqkv, int seq_len, int dim,
                             int heads);
void AttentionStep(std::span<const double> q, std::span<const double> k_cache,
                   std::span<const double> v_cache, std::span<double> out,
                   int cached, int dim, int heads);
void LogSoftmaxRows(std::span<const double> logits, std::span<double> out,
                    int rows, int cols);

}  // namespace parallel

}  // namespace sepslab::kernels

#endif  // SEPSLAB_KERNELS_H_
