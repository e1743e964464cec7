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

#include "sepslab/remote_model.h"

#include "sepslab/errors.h"

namespace sepslab {
namespace {

// Re-raises a structured server error as the matching local exception.
[[noreturn]] void Rethrow(const HttpStatusError& e) {
  nlohmann::json doc = nlohmann::json::parse(e.body(), nullptr, false);
  if (doc.is_object() && doc.contains("error") && doc["error"].is_object()) {
    const std::string kind = doc["error"].value("kind", "");
    const std::string message = doc["error"].value("message", e.what());
    if (kind == "context_overflow") {
      throw ContextOverflowError(doc["error"].value("length", 0),
                                 doc["error"].value("max_context", 0));
    }
    if (kind == "codec") throw CodecError(message);
    if (kind == "validation") throw ValidationError(message);
  }
  throw e;
}

}  // namespace

RemoteModel::RemoteModel(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
  const nlohmann::json info = Call("/info", nlohmann::json::object());
  try {
    max_context_ = info.at("max_context").get<int>();
    codec_ = Tokenizer::FromPieces(
        info.at("pieces").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed /info reply: ") + e.what());
  }
}

nlohmann::json RemoteModel::Call(const std::string& path,
                                 const nlohmann::json& body) const {
  try {
    return PostJson(endpoint_, path, body);
  } catch (const HttpStatusError& e) {
    Rethrow(e);
  }
}

std::vector<double> RemoteModel::TokenLogProbs(std::span<const int> ids) const {
  const nlohmann::json reply =
      Call("/logprobs", {{"prefix", std::vector<int>(ids.begin(), ids.end())},
                         {"continuation", std::vector<int>()}});
  try {
    auto out = reply.at("token_logprobs").get<std::vector<double>>();
    if (out.size() != (ids.size() <= 1 ? 0 : ids.size() - 1)) {
      throw IoError("server returned " + std::to_string(out.size()) +
                    " log-probs for " + std::to_string(ids.size()) + " tokens");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed /logprobs reply: ") + e.what());
  }
}

std::vector<double> RemoteModel::NextTokenLogProbs(
    std::span<const int> prefix) const {
  const nlohmann::json reply =
      Call("/logprobs",
           {{"prefix", std::vector<int>(prefix.begin(), prefix.end())}});
  try {
    auto out = reply.at("next").get<std::vector<double>>();
    if (static_cast<int>(out.size()) != vocab_size()) {
      throw IoError("server distribution does not span the vocabulary");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed /logprobs reply: ") + e.what());
  }
}

std::string RemoteModel::GenerateGreedy(std::string_view prefix,
                                        int max_new_tokens) const {
  const nlohmann::json reply = Call(
      "/generate",
      {{"prefix", std::string(prefix)}, {"max_new_tokens", max_new_tokens}});
  try {
    return reply.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed /generate reply: ") + e.what());
  }
}

}  // namespace sepslab
