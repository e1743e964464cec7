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

// Minimal JSON-over-HTTP client used by the remote model, judge and
// embedding adapters.

#ifndef SEPSLAB_HTTP_H_
#define SEPSLAB_HTTP_H_

#include <string>

#include "json.hpp"
#include "sepslab/errors.h"

namespace sepslab {

struct HttpEndpoint {
  std::string url;           // scheme://host[:port][/base]
  std::string bearer_token;  // sent as "Authorization: Bearer ..." if set
  int timeout_seconds = 30;
};

// A reply with a non-2xx status; the body is kept for structured errors.
class HttpStatusError : public IoError {
 public:
  HttpStatusError(int status, std::string body, const std::string& what)
      : IoError(what), status_(status), body_(std::move(body)) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

// POSTs `body` to endpoint.url + path and parses the JSON reply. Throws
// IoError on transport failures, non-2xx statuses or malformed replies.
nlohmann::json PostJson(const HttpEndpoint& endpoint, const std::string& path,
                        const nlohmann::json& body);

}  // namespace sepslab

#endif  // SEPSLAB_HTTP_H_
