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

#include "sepslab/rng.h"

namespace sepslab {
namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t Fnv1a64(std::string_view data, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng SubStream(uint64_t root_seed, std::string_view name) {
  const uint64_t mixed = SplitMix64(root_seed ^ SplitMix64(Fnv1a64(name)));
  std::seed_seq seq{static_cast<uint32_t>(mixed),
                    static_cast<uint32_t>(mixed >> 32)};
  return Rng(seq);
}

size_t UniformIndex(Rng& rng, size_t n) {
  std::uniform_int_distribution<size_t> dist(0, n - 1);
  return dist(rng);
}

}  // namespace sepslab
