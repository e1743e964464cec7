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

// Serial reference kernels against their OpenMP counterparts at the shapes a
// default model sees during training (sequence 64, width 64, vocabulary 600).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sepslab/kernels.h"

namespace {

namespace k = sepslab::kernels;

std::vector<double> Random(size_t n, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

template <bool kParallel>
void BM_Linear(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  const int in = 64;
  const int out = static_cast<int>(state.range(1));
  const auto x = Random(static_cast<size_t>(rows) * in, 1);
  const auto w = Random(static_cast<size_t>(out) * in, 2);
  const auto b = Random(out, 3);
  std::vector<double> y(static_cast<size_t>(rows) * out);
  for (auto _ : state) {
    if constexpr (kParallel) {
      k::parallel::Linear(x, w, b, y, rows, in, out);
    } else {
      k::serial::Linear(x, w, b, y, rows, in, out);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * rows * in * out);
}

template <bool kParallel>
void BM_LinearBackward(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  const int in = 64;
  const int out = static_cast<int>(state.range(1));
  const auto x = Random(static_cast<size_t>(rows) * in, 1);
  const auto w = Random(static_cast<size_t>(out) * in, 2);
  const auto dy = Random(static_cast<size_t>(rows) * out, 3);
  std::vector<double> dx(x.size()), dw(w.size()), db(out);
  for (auto _ : state) {
    if constexpr (kParallel) {
      k::parallel::LinearBackward(x, w, dy, dx, dw, db, rows, in, out);
    } else {
      k::serial::LinearBackward(x, w, dy, dx, dw, db, rows, in, out);
    }
    benchmark::DoNotOptimize(dw.data());
  }
}

template <bool kParallel>
void BM_CausalAttention(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0));
  const int d = 64;
  const int heads = 4;
  const auto qkv = Random(static_cast<size_t>(t) * 3 * d, 4);
  std::vector<double> probs(static_cast<size_t>(heads) * t * t),
      out(static_cast<size_t>(t) * d);
  for (auto _ : state) {
    if constexpr (kParallel) {
      k::parallel::CausalAttention(qkv, probs, out, t, d, heads);
    } else {
      k::serial::CausalAttention(qkv, probs, out, t, d, heads);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool kParallel>
void BM_LogSoftmaxRows(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  const int cols = 600;
  const auto logits = Random(static_cast<size_t>(rows) * cols, 5);
  std::vector<double> out(logits.size());
  for (auto _ : state) {
    if constexpr (kParallel) {
      k::parallel::LogSoftmaxRows(logits, out, rows, cols);
    } else {
      k::serial::LogSoftmaxRows(logits, out, rows, cols);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

BENCHMARK(BM_Linear<false>)->Args({64, 192})->Args({64, 600})->Args({256, 600});
BENCHMARK(BM_Linear<true>)->Args({64, 192})->Args({64, 600})->Args({256, 600});
BENCHMARK(BM_LinearBackward<false>)->Args({64, 192})->Args({64, 600});
BENCHMARK(BM_LinearBackward<true>)->Args({64, 192})->Args({64, 600});
BENCHMARK(BM_CausalAttention<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_CausalAttention<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_LogSoftmaxRows<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_LogSoftmaxRows<true>)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
