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

// Serves a LanguageModel over the protocol documented in remote_model.h.

#ifndef SEPSLAB_MODEL_SERVER_H_
#define SEPSLAB_MODEL_SERVER_H_

#include <memory>
#include <string>
#include <thread>

#include "sepslab/language_model.h"

namespace httplib {
class Server;
}

namespace sepslab {

class ModelServer {
 public:
  // `model` must outlive the server.
  explicit ModelServer(const LanguageModel& model);
  ~ModelServer();
  ModelServer(const ModelServer&) = delete;
  ModelServer& operator=(const ModelServer&) = delete;

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port. Throws IoError when binding fails.
  int Start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks serving on the calling thread until Stop() from elsewhere.
  void Serve(const std::string& host, int port);
  void Stop();

 private:
  const LanguageModel& model_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace sepslab

#endif  // SEPSLAB_MODEL_SERVER_H_
