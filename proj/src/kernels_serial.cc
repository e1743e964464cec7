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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "sepslab/kernels.h"

namespace sepslab::kernels::serial {
namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

void Linear(std::span<const double> x, std::span<const double> w,
            std::span<const double> b, std::span<double> y, int rows, int in,
            int out) {
  for (int r = 0; r < rows; ++r) {
    for (int o = 0; o < out; ++o) {
      double acc = b.empty() ? 0.0 : b[o];
      for (int i = 0; i < in; ++i) acc += x[r * in + i] * w[o * in + i];
      y[r * out + o] = acc;
    }
  }
}

void LinearBackward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> dy, std::span<double> dx,
                    std::span<double> dw, std::span<double> db, int rows,
                    int in, int out) {
  for (int r = 0; r < rows; ++r) {
    for (int o = 0; o < out; ++o) {
      const double g = dy[r * out + o];
      if (!dx.empty()) {
        for (int i = 0; i < in; ++i) dx[r * in + i] += g * w[o * in + i];
      }
      for (int i = 0; i < in; ++i) dw[o * in + i] += g * x[r * in + i];
      if (!db.empty()) db[o] += g;
    }
  }
}

void LayerNorm(std::span<const double> x, std::span<const double> gamma,
               std::span<const double> beta, std::span<double> y,
               std::span<double> mean, std::span<double> rstd, int rows,
               int dim) {
  for (int r = 0; r < rows; ++r) {
    const double* row = &x[r * dim];
    double m = 0.0;
    for (int i = 0; i < dim; ++i) m += row[i];
    m /= dim;
    double v = 0.0;
    for (int i = 0; i < dim; ++i) v += (row[i] - m) * (row[i] - m);
    v /= dim;
    const double s = 1.0 / std::sqrt(v + kLayerNormEps);
    mean[r] = m;
    rstd[r] = s;
    for (int i = 0; i < dim; ++i) {
      y[r * dim + i] = (row[i] - m) * s * gamma[i] + beta[i];
    }
  }
}

void LayerNormBackward(std::span<const double> x, std::span<const double> gamma,
                       std::span<const double> mean,
                       std::span<const double> rstd, std::span<const double> dy,
                       std::span<double> dx, std::span<double> dgamma,
                       std::span<double> dbeta, int rows, int dim) {
  for (int r = 0; r < rows; ++r) {
    const double m = mean[r];
    const double s = rstd[r];
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double xhat = (x[r * dim + i] - m) * s;
      const double g = dy[r * dim + i] * gamma[i];
      sum_g += g;
      sum_gx += g * xhat;
      dgamma[i] += dy[r * dim + i] * xhat;
      dbeta[i] += dy[r * dim + i];
    }
    for (int i = 0; i < dim; ++i) {
      const double xhat = (x[r * dim + i] - m) * s;
      const double g = dy[r * dim + i] * gamma[i];
      dx[r * dim + i] += s * (g - sum_g / dim - xhat * sum_gx / dim);
    }
  }
}

void Gelu(std::span<const double> x, std::span<double> y) {
  for (size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    y[i] = 0.5 * v * (1.0 + t);
  }
}

void GeluBackward(std::span<const double> x, std::span<const double> dy,
                  std::span<double> dx) {
  for (size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const double u = kGeluC * (v + kGeluA * v * v * v);
    const double t = std::tanh(u);
    const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
    const double grad = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
    dx[i] += dy[i] * grad;
  }
}

void CausalAttention(std::span<const double> qkv, std::span<double> probs,
                     std::span<double> out, int seq_len, int dim, int heads) {
  const int head_dim = dim / heads;
  const int stride = 3 * dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (int h = 0; h < heads; ++h) {
    const int qo = h * head_dim;
    const int ko = dim + h * head_dim;
    const int vo = 2 * dim + h * head_dim;
    double* p = &probs[static_cast<size_t>(h) * seq_len * seq_len];
    for (int i = 0; i < seq_len; ++i) {
      double max_score = -std::numeric_limits<double>::infinity();
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int d = 0; d < head_dim; ++d) {
          s += qkv[i * stride + qo + d] * qkv[j * stride + ko + d];
        }
        s *= scale;
        p[i * seq_len + j] = s;
        max_score = std::max(max_score, s);
      }
      double z = 0.0;
      for (int j = 0; j <= i; ++j) {
        p[i * seq_len + j] = std::exp(p[i * seq_len + j] - max_score);
        z += p[i * seq_len + j];
      }
      for (int j = 0; j <= i; ++j) p[i * seq_len + j] /= z;
      for (int j = i + 1; j < seq_len; ++j) p[i * seq_len + j] = 0.0;
      for (int d = 0; d < head_dim; ++d) {
        double acc = 0.0;
        for (int j = 0; j <= i; ++j) {
          acc += p[i * seq_len + j] * qkv[j * stride + vo + d];
        }
        out[i * dim + qo + d] = acc;
      }
    }
  }
}

void CausalAttentionBackward(std::span<const double> qkv,
                             std::span<const double> probs,
                             std::span<const double> dout,
                             std::span<double> dqkv, int seq_len, int dim,
                             int heads) {
  const int head_dim = dim / heads;
  const int stride = 3 * dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<double> dp(seq_len);
  for (int h = 0; h < heads; ++h) {
    const int qo = h * head_dim;
    const int ko = dim + h * head_dim;
    const int vo = 2 * dim + h * head_dim;
    const double* p = &probs[static_cast<size_t>(h) * seq_len * seq_len];
    for (int i = 0; i < seq_len; ++i) {
      double dot = 0.0;
      for (int j = 0; j <= i; ++j) {
        double g = 0.0;
        for (int d = 0; d < head_dim; ++d) {
          g += dout[i * dim + qo + d] * qkv[j * stride + vo + d];
          dqkv[j * stride + vo + d] +=
              p[i * seq_len + j] * dout[i * dim + qo + d];
        }
        dp[j] = g;
        dot += p[i * seq_len + j] * g;
      }
      for (int j = 0; j <= i; ++j) {
        const double ds = p[i * seq_len + j] * (dp[j] - dot) * scale;
        for (int d = 0; d < head_dim; ++d) {
          dqkv[i * stride + qo + d] += ds * qkv[j * stride + ko + d];
          dqkv[j * stride + ko + d] += ds * qkv[i * stride + qo + d];
        }
      }
    }
  }
}

void AttentionStep(std::span<const double> q, std::span<const double> k_cache,
                   std::span<const double> v_cache, std::span<double> out,
                   int cached, int dim, int heads) {
  const int head_dim = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<double> p(cached);
  for (int h = 0; h < heads; ++h) {
    const int o = h * head_dim;
    double max_score = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < cached; ++j) {
      double s = 0.0;
      for (int d = 0; d < head_dim; ++d)
        s += q[o + d] * k_cache[j * dim + o + d];
      p[j] = s * scale;
      max_score = std::max(max_score, p[j]);
    }
    double z = 0.0;
    for (int j = 0; j < cached; ++j) {
      p[j] = std::exp(p[j] - max_score);
      z += p[j];
    }
    for (int d = 0; d < head_dim; ++d) {
      double acc = 0.0;
      for (int j = 0; j < cached; ++j)
        acc += p[j] / z * v_cache[j * dim + o + d];
      out[o + d] = acc;
    }
  }
}

void LogSoftmaxRows(std::span<const double> logits, std::span<double> out,
                    int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double* z = &logits[static_cast<size_t>(r) * cols];
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cols; ++c) m = std::max(m, z[c]);
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += std::exp(z[c] - m);
    const double lse = m + std::log(s);
    for (int c = 0; c < cols; ++c)
      out[static_cast<size_t>(r) * cols + c] = z[c] - lse;
  }
}

}  // namespace sepslab::kernels::serial
