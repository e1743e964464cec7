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

#include "sepslab/model_server.h"

#include "httplib.h"
#include "json.hpp"
#include "sepslab/errors.h"

namespace sepslab {
namespace {

void Reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void ReplyError(httplib::Response& res, int status, const std::string& kind,
                const std::string& message,
                nlohmann::json extra = nlohmann::json::object()) {
  extra["kind"] = kind;
  extra["message"] = message;
  Reply(res, status, {{"error", extra}});
}

// Runs `fn` and translates library exceptions into structured errors.
template <typename Fn>
void Guard(httplib::Response& res, Fn fn) {
  try {
    Reply(res, 200, fn());
  } catch (const ContextOverflowError& e) {
    ReplyError(res, 422, "context_overflow", e.what(),
               {{"length", e.length()}, {"max_context", e.max_context()}});
  } catch (const CodecError& e) {
    ReplyError(res, 422, "codec", e.what());
  } catch (const ValidationError& e) {
    ReplyError(res, 400, "validation", e.what());
  } catch (const nlohmann::json::exception& e) {
    ReplyError(res, 400, "validation", e.what());
  } catch (const std::exception& e) {
    ReplyError(res, 500, "internal", e.what());
  }
}

}  // namespace

ModelServer::ModelServer(const LanguageModel& model)
    : model_(model), server_(std::make_unique<httplib::Server>()) {
  server_->Post(
      "/info", [this](const httplib::Request&, httplib::Response& res) {
        Guard(res, [&] {
          return nlohmann::json{{"max_context", model_.max_context()},
                                {"pieces", model_.tokenizer().pieces()}};
        });
      });
  server_->Post(
      "/logprobs", [this](const httplib::Request& req, httplib::Response& res) {
        Guard(res, [&] {
          const auto body = nlohmann::json::parse(req.body);
          auto ids = body.at("prefix").get<std::vector<int>>();
          if (!body.contains("continuation")) {
            return nlohmann::json{{"next", model_.NextTokenLogProbs(ids)}};
          }
          const auto more = body.at("continuation").get<std::vector<int>>();
          ids.insert(ids.end(), more.begin(), more.end());
          return nlohmann::json{{"token_logprobs", model_.TokenLogProbs(ids)}};
        });
      });
  server_->Post(
      "/generate", [this](const httplib::Request& req, httplib::Response& res) {
        Guard(res, [&] {
          const auto body = nlohmann::json::parse(req.body);
          return nlohmann::json{
              {"text",
               model_.GenerateGreedy(body.at("prefix").get<std::string>(),
                                     body.at("max_new_tokens").get<int>())}};
        });
      });
}

ModelServer::~ModelServer() { Stop(); }

int ModelServer::Start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host)
                              : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0)
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void ModelServer::Serve(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw IoError("cannot serve on " + host + ":" + std::to_string(port));
  }
}

void ModelServer::Stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace sepslab
