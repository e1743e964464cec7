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

// Seeded randomness. Every subsystem draws from its own named substream of
// one root seed so that, for example, adding an IDK draw never shifts the
// data-sampling sequence.

#ifndef SEPSLAB_RNG_H_
#define SEPSLAB_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace sepslab {

using Rng = std::mt19937_64;

// 64-bit FNV-1a. Stable across platforms; used for substream names and
// dataset/config fingerprints.
uint64_t Fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ULL);

Rng SubStream(uint64_t root_seed, std::string_view name);

// Uniform index in [0, n).
size_t UniformIndex(Rng& rng, size_t n);

}  // namespace sepslab

#endif  // SEPSLAB_RNG_H_
