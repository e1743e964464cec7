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

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sepslab/kernels.h"

namespace sepslab::kernels::parallel {
namespace {

constexpr double kGeluC = 0.7978845608028654;
constexpr double kGeluA = 0.044715;

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr long kMinParallelWork = 1L << 15;

inline double Dot(const double* __restrict a, const double* __restrict b,
                  int n) {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline void Axpy(double alpha, const double* __restrict x, double* __restrict y,
                 int n) {
#pragma omp simd
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

void Linear(std::span<const double> x, std::span<const double> w,
            std::span<const double> b, std::span<double> y, int rows, int in,
            int out) {
  const double* xp = x.data();
  const double* wp = w.data();
  double* yp = y.data();
  const bool has_bias = !b.empty();
  const long work = static_cast<long>(rows) * in * out;
#pragma omp parallel for collapse(2) \
    schedule(static) if (work > kMinParallelWork)
  for (int r = 0; r < rows; ++r) {
    for (int o = 0; o < out; ++o) {
      const double acc = Dot(xp + static_cast<size_t>(r) * in,
                             wp + static_cast<size_t>(o) * in, in);
      yp[static_cast<size_t>(r) * out + o] = has_bias ? acc + b[o] : acc;
    }
  }
}

void LinearBackward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> dy, std::span<double> dx,
                    std::span<double> dw, std::span<double> db, int rows,
                    int in, int out) {
  const double* xp = x.data();
  const double* wp = w.data();
  const double* gp = dy.data();
  const long work = static_cast<long>(rows) * in * out;
  if (!dx.empty()) {
    double* dxp = dx.data();
#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
    for (int r = 0; r < rows; ++r) {
      double* dst = dxp + static_cast<size_t>(r) * in;
      for (int o = 0; o < out; ++o) {
        const double g = gp[static_cast<size_t>(r) * out + o];
        if (g != 0.0) Axpy(g, wp + static_cast<size_t>(o) * in, dst, in);
      }
    }
  }
  double* dwp = dw.data();
#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
  for (int o = 0; o < out; ++o) {
    double* dst = dwp + static_cast<size_t>(o) * in;
    double bias_acc = 0.0;
    for (int r = 0; r < rows; ++r) {
      const double g = gp[static_cast<size_t>(r) * out + o];
      bias_acc += g;
      if (g != 0.0) Axpy(g, xp + static_cast<size_t>(r) * in, dst, in);
    }
    if (!db.empty()) db[o] += bias_acc;
  }
}

void LayerNorm(std::span<const double> x, std::span<const double> gamma,
               std::span<const double> beta, std::span<double> y,
               std::span<double> mean, std::span<double> rstd, int rows,
               int dim) {
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * dim > \
                                                  kMinParallelWork)
  for (int r = 0; r < rows; ++r) {
    const double* row = &x[static_cast<size_t>(r) * dim];
    double m = 0.0;
#pragma omp simd reduction(+ : m)
    for (int i = 0; i < dim; ++i) m += row[i];
    m /= dim;
    double v = 0.0;
#pragma omp simd reduction(+ : v)
    for (int i = 0; i < dim; ++i) v += (row[i] - m) * (row[i] - m);
    v /= dim;
    const double s = 1.0 / std::sqrt(v + kLayerNormEps);
    mean[r] = m;
    rstd[r] = s;
    double* dst = &y[static_cast<size_t>(r) * dim];
#pragma omp simd
    for (int i = 0; i < dim; ++i)
      dst[i] = (row[i] - m) * s * gamma[i] + beta[i];
  }
}

void LayerNormBackward(std::span<const double> x, std::span<const double> gamma,
                       std::span<const double> mean,
                       std::span<const double> rstd, std::span<const double> dy,
                       std::span<double> dx, std::span<double> dgamma,
                       std::span<double> dbeta, int rows, int dim) {
  const bool go_parallel = static_cast<long>(rows) * dim > kMinParallelWork;
#pragma omp parallel for schedule(static) if (go_parallel)
  for (int r = 0; r < rows; ++r) {
    const double m = mean[r];
    const double s = rstd[r];
    const double* xr = &x[static_cast<size_t>(r) * dim];
    const double* gr = &dy[static_cast<size_t>(r) * dim];
    double sum_g = 0.0;
    double sum_gx = 0.0;
#pragma omp simd reduction(+ : sum_g, sum_gx)
    for (int i = 0; i < dim; ++i) {
      const double g = gr[i] * gamma[i];
      sum_g += g;
      sum_gx += g * (xr[i] - m) * s;
    }
    double* dst = &dx[static_cast<size_t>(r) * dim];
#pragma omp simd
    for (int i = 0; i < dim; ++i) {
      const double xhat = (xr[i] - m) * s;
      dst[i] += s * (gr[i] * gamma[i] - sum_g / dim - xhat * sum_gx / dim);
    }
  }
#pragma omp parallel for schedule(static) if (go_parallel)
  for (int i = 0; i < dim; ++i) {
    double acc_g = 0.0;
    double acc_b = 0.0;
    for (int r = 0; r < rows; ++r) {
      const size_t idx = static_cast<size_t>(r) * dim + i;
      acc_g += dy[idx] * (x[idx] - mean[r]) * rstd[r];
      acc_b += dy[idx];
    }
    dgamma[i] += acc_g;
    dbeta[i] += acc_b;
  }
}

void Gelu(std::span<const double> x, std::span<double> y) {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for simd schedule(static) if (n > kMinParallelWork)
  for (long i = 0; i < n; ++i) {
    const double v = x[i];
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    y[i] = 0.5 * v * (1.0 + t);
  }
}

void GeluBackward(std::span<const double> x, std::span<const double> dy,
                  std::span<double> dx) {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for simd schedule(static) if (n > kMinParallelWork)
  for (long i = 0; i < n; ++i) {
    const double v = x[i];
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
    dx[i] += dy[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
  }
}

void CausalAttention(std::span<const double> qkv, std::span<double> probs,
                     std::span<double> out, int seq_len, int dim, int heads) {
  const int head_dim = dim / heads;
  const int stride = 3 * dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const double* base = qkv.data();
  const long work = static_cast<long>(seq_len) * seq_len * dim;
#pragma omp parallel for collapse(2) \
    schedule(static) if (work > kMinParallelWork)
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < seq_len; ++i) {
      const int qo = h * head_dim;
      const int ko = dim + h * head_dim;
      const int vo = 2 * dim + h * head_dim;
      double* p = &probs[(static_cast<size_t>(h) * seq_len + i) * seq_len];
      const double* qi = base + static_cast<size_t>(i) * stride + qo;
      double max_score = -std::numeric_limits<double>::infinity();
      for (int j = 0; j <= i; ++j) {
        p[j] = Dot(qi, base + static_cast<size_t>(j) * stride + ko, head_dim) *
               scale;
        max_score = std::max(max_score, p[j]);
      }
      double z = 0.0;
      for (int j = 0; j <= i; ++j) {
        p[j] = std::exp(p[j] - max_score);
        z += p[j];
      }
      const double inv = 1.0 / z;
      for (int j = 0; j <= i; ++j) p[j] *= inv;
      for (int j = i + 1; j < seq_len; ++j) p[j] = 0.0;
      double* dst = &out[static_cast<size_t>(i) * dim + qo];
      for (int d = 0; d < head_dim; ++d) dst[d] = 0.0;
      for (int j = 0; j <= i; ++j) {
        Axpy(p[j], base + static_cast<size_t>(j) * stride + vo, dst, head_dim);
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
  const double* base = qkv.data();
  double* grad = dqkv.data();
  const long work = static_cast<long>(seq_len) * seq_len * dim;
  // Heads own disjoint column blocks of dqkv, so they can run concurrently.
#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
  for (int h = 0; h < heads; ++h) {
    std::vector<double> ds(seq_len);
    const int qo = h * head_dim;
    const int ko = dim + h * head_dim;
    const int vo = 2 * dim + h * head_dim;
    for (int i = 0; i < seq_len; ++i) {
      const double* p =
          &probs[(static_cast<size_t>(h) * seq_len + i) * seq_len];
      const double* gi = &dout[static_cast<size_t>(i) * dim + qo];
      double dot = 0.0;
      for (int j = 0; j <= i; ++j) {
        ds[j] = Dot(gi, base + static_cast<size_t>(j) * stride + vo, head_dim);
        dot += p[j] * ds[j];
        Axpy(p[j], gi, grad + static_cast<size_t>(j) * stride + vo, head_dim);
      }
      const double* qi = base + static_cast<size_t>(i) * stride + qo;
      double* dqi = grad + static_cast<size_t>(i) * stride + qo;
      for (int j = 0; j <= i; ++j) {
        const double g = p[j] * (ds[j] - dot) * scale;
        Axpy(g, base + static_cast<size_t>(j) * stride + ko, dqi, head_dim);
        Axpy(g, qi, grad + static_cast<size_t>(j) * stride + ko, head_dim);
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
      p[j] = Dot(&q[o], &k_cache[static_cast<size_t>(j) * dim + o], head_dim) *
             scale;
      max_score = std::max(max_score, p[j]);
    }
    double z = 0.0;
    for (int j = 0; j < cached; ++j) {
      p[j] = std::exp(p[j] - max_score);
      z += p[j];
    }
    for (int d = 0; d < head_dim; ++d) out[o + d] = 0.0;
    const double inv = 1.0 / z;
    for (int j = 0; j < cached; ++j) {
      Axpy(p[j] * inv, &v_cache[static_cast<size_t>(j) * dim + o], &out[o],
           head_dim);
    }
  }
}

void LogSoftmaxRows(std::span<const double> logits, std::span<double> out,
                    int rows, int cols) {
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * cols > \
                                                  kMinParallelWork)
  for (int r = 0; r < rows; ++r) {
    const double* z = &logits[static_cast<size_t>(r) * cols];
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cols; ++c) m = std::max(m, z[c]);
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += std::exp(z[c] - m);
    const double lse = m + std::log(s);
    double* dst = &out[static_cast<size_t>(r) * cols];
#pragma omp simd
    for (int c = 0; c < cols; ++c) dst[c] = z[c] - lse;
  }
}

}  // namespace sepslab::kernels::parallel
