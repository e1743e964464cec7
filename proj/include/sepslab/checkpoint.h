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

// Binary model checkpoints and run-directory manifests.
//
// A checkpoint file holds an 8-byte magic, a format version, a JSON header
// (model config and tokenizer pieces) and the flat parameter vector as raw
// little-endian doubles. Run directories hold one `epoch_N/model.bin` per
// saved epoch next to a `manifest.json`.

#ifndef SEPSLAB_CHECKPOINT_H_
#define SEPSLAB_CHECKPOINT_H_

#include <string>

#include "json.hpp"
#include "sepslab/tiny_transformer.h"

namespace sepslab {

inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'P', 'S',
                                             'C', 'K', 'P', 'T'};
inline constexpr uint32_t kCheckpointVersion = 1;

// Writes to a sibling temporary file and renames it into place.
void WriteFileAtomic(const std::string& path, const std::string& bytes);
std::string ReadFile(const std::string& path);

std::string SerializeModel(const TinyTransformer& model);
// Throws ParseError on a bad magic, version, header or payload size.
TinyTransformer DeserializeModel(const std::string& bytes);

void SaveModel(const std::string& path, const TinyTransformer& model);
TinyTransformer LoadModel(const std::string& path);

// Lowercase hex SHA-256.
std::string Sha256Hex(const std::string& bytes);

std::string EpochDirectory(const std::string& run_dir, int epoch);
std::string ManifestPath(const std::string& run_dir);
void WriteManifest(const std::string& run_dir, const nlohmann::json& manifest);
nlohmann::json ReadManifest(const std::string& run_dir);

}  // namespace sepslab

#endif  // SEPSLAB_CHECKPOINT_H_
