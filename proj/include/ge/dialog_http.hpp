/*
 * Copyright 2026 The Grounded Explainer Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// HTTP client for the external clarification dialog service.

#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "ge/dialog.hpp"
#include "ge/error.hpp"

namespace ge {

struct HttpEndpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

inline HttpEndpoint parse_http_url(const std::string& url) {
  constexpr std::string_view kScheme = "http://";
  if (url.rfind(kScheme, 0) != 0) throw Error(Errc::kInvalidArgument, "unsupported dialog service URL '" + url + "'");
  const auto slash = url.find('/', kScheme.size());
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

// POSTs the request JSON and expects {"text": "..."}. Each attempt is bounded
// by `timeout`; after 1 + retries failed attempts the call yields nullopt.
class HttpDialogClient : public DialogClient {
 public:
  HttpDialogClient(const std::string& url, std::chrono::milliseconds timeout, int retries = 1)
      : endpoint_(parse_http_url(url)), timeout_(timeout), retries_(retries) {}

  std::optional<std::string> complete(const DialogRequest& request) override {
    const std::string body = request.to_json().dump();
    for (int attempt = 0; attempt <= retries_; ++attempt) {
      httplib::Client client(endpoint_.origin);
      const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
      const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - sec);
      client.set_connection_timeout(sec.count(), usec.count());
      client.set_read_timeout(sec.count(), usec.count());
      client.set_write_timeout(sec.count(), usec.count());
      auto res = client.Post(endpoint_.path, body, "application/json");
      if (!res || res->status != 200) continue;
      try {
        auto j = nlohmann::json::parse(res->body);
        if (j.is_object() && j.contains("text") && j["text"].is_string()) {
          auto text = j["text"].get<std::string>();
          if (!text.empty()) return text;
        }
      } catch (const nlohmann::json::exception&) {
      }
    }
    return std::nullopt;
  }

 private:
  HttpEndpoint endpoint_;
  std::chrono::milliseconds timeout_;
  int retries_;
};

// Client for a config's dialog_service_url, or null when none is set.
inline std::shared_ptr<DialogClient> make_dialog_client(const std::optional<std::string>& url,
                                                        std::chrono::milliseconds timeout, int retries) {
  if (!url) return nullptr;
  return std::make_shared<HttpDialogClient>(*url, timeout, retries);
}

}  // namespace ge
