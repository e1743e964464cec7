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

#include "sepslab/checkpoint.h"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sepslab/errors.h"

namespace sepslab {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are stored little-endian");

template <typename T>
void Put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T Take(const std::string& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ParseError(0, "truncated checkpoint");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

nlohmann::json ConfigToJson(const TransformerConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"max_context", c.max_context},
          {"d_model", c.d_model},       {"n_heads", c.n_heads},
          {"n_layers", c.n_layers},     {"d_ff", c.d_ff}};
}

TransformerConfig ConfigFromJson(const nlohmann::json& j) {
  TransformerConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_context = j.at("max_context").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  return c;
}

}  // namespace

void WriteFileAtomic(const std::string& path, const std::string& bytes) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
    if (ec)
      throw IoError("cannot create directory for '" + path +
                    "': " + ec.message());
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "': " + ec.message());
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string SerializeModel(const TinyTransformer& model) {
  const nlohmann::json header = {{"config", ConfigToJson(model.config())},
                                 {"pieces", model.tokenizer().pieces()},
                                 {"num_parameters", model.num_parameters()}};
  const std::string h = header.dump();
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  Put<uint32_t>(out, kCheckpointVersion);
  Put<uint64_t>(out, h.size());
  out += h;
  const auto params = model.parameters();
  out.append(reinterpret_cast<const char*>(params.data()), params.size_bytes());
  return out;
}

TinyTransformer DeserializeModel(const std::string& bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) !=
          0) {
    throw ParseError(0, "not a checkpoint (bad magic)");
  }
  size_t pos = sizeof(kCheckpointMagic);
  const auto version = Take<uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw ParseError(
        0, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_size = Take<uint64_t>(bytes, pos);
  if (pos + header_size > bytes.size())
    throw ParseError(0, "truncated checkpoint header");
  nlohmann::json header;
  TransformerConfig config;
  std::vector<std::string> pieces;
  size_t count = 0;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_size));
    config = ConfigFromJson(header.at("config"));
    pieces = header.at("pieces").get<std::vector<std::string>>();
    count = header.at("num_parameters").get<size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("bad checkpoint header: ") + e.what());
  }
  pos += header_size;
  if (bytes.size() - pos != count * sizeof(double)) {
    throw ParseError(0, "checkpoint payload size does not match header");
  }
  std::vector<double> params(count);
  std::memcpy(params.data(), bytes.data() + pos, count * sizeof(double));
  return TinyTransformer(config, Tokenizer::FromPieces(std::move(pieces)),
                         std::move(params));
}

void SaveModel(const std::string& path, const TinyTransformer& model) {
  WriteFileAtomic(path, SerializeModel(model));
}

TinyTransformer LoadModel(const std::string& path) {
  return DeserializeModel(ReadFile(path));
}

std::string Sha256Hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string EpochDirectory(const std::string& run_dir, int epoch) {
  return (std::filesystem::path(run_dir) / ("epoch_" + std::to_string(epoch)))
      .string();
}

std::string ManifestPath(const std::string& run_dir) {
  return (std::filesystem::path(run_dir) / "manifest.json").string();
}

void WriteManifest(const std::string& run_dir, const nlohmann::json& manifest) {
  WriteFileAtomic(ManifestPath(run_dir), manifest.dump(2) + "\n");
}

nlohmann::json ReadManifest(const std::string& run_dir) {
  const std::string path = ManifestPath(run_dir);
  try {
    return nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, "bad manifest '" + path + "': " + e.what());
  }
}

}  // namespace sepslab
