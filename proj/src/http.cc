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

#include "sepslab/http.h"

#include "httplib.h"
#include "sepslab/errors.h"

namespace sepslab {

nlohmann::json PostJson(const HttpEndpoint& endpoint, const std::string& path,
                        const nlohmann::json& body) {
  const std::string& url = endpoint.url;
  const size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw IoError("endpoint '" + url + "' lacks a scheme");
  }
  const size_t path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  std::string base =
      path_start == std::string::npos ? "" : url.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();

  httplib::Client client(origin);
  client.set_connection_timeout(endpoint.timeout_seconds, 0);
  client.set_read_timeout(endpoint.timeout_seconds, 0);
  client.set_write_timeout(endpoint.timeout_seconds, 0);
  httplib::Headers headers;
  if (!endpoint.bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.bearer_token);
  }
  const std::string target = base + path;
  auto res = client.Post(target, headers, body.dump(), "application/json");
  if (!res) {
    throw IoError("request to " + origin + target +
                  " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw HttpStatusError(res->status, res->body,
                          "request to " + origin + target +
                              " returned status " +
                              std::to_string(res->status) + ": " + res->body);
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed JSON from " + origin + target + ": " + e.what());
  }
}

}  // namespace sepslab
