//
// Copyright 2026 The UDG Authors
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
//

#include "udg/http_lm.hpp"

#include <algorithm>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace udg {
namespace {

using json = nlohmann::json;

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0) {
    throw ProviderUnavailable("unsupported endpoint (need http://): " + url);
  }
  const std::size_t slash = url.find('/', scheme.size());
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

struct HttpLm::Impl {
  ParsedUrl url;
  std::string token;
  HttpLmOptions options;
  mutable std::counting_semaphore<1024> in_flight;

  Impl(ParsedUrl u, std::string t, HttpLmOptions o)
      : url(std::move(u)),
        token(std::move(t)),
        options(o),
        in_flight(std::max(1, std::min(o.max_in_flight, 1024))) {}
};

HttpLm::HttpLm(std::string endpoint, std::string bearer_token,
               HttpLmOptions options)
    : impl_(std::make_unique<Impl>(parse_url(endpoint), std::move(bearer_token),
                                   options)) {
  if (options.attempts < 1) throw InvalidParams("attempts must be >= 1");
}

HttpLm::~HttpLm() = default;

std::unique_ptr<HttpLm> HttpLm::from_env(HttpLmOptions options) {
  const char* endpoint = std::getenv("UDG_LM_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') {
    throw ProviderUnavailable("UDG_LM_ENDPOINT is not set");
  }
  const char* token = std::getenv("UDG_LM_TOKEN");
  return std::make_unique<HttpLm>(endpoint, token ? token : "", options);
}

std::string HttpLm::encode_request(std::string_view prompt,
                                   const DecodingParams& params) {
  json j;
  j["prompt"] = std::string(prompt);
  j["max_tokens"] = params.max_new_tokens;
  j["top_k"] = params.top_k;
  j["temperature"] = params.temperature;
  j["stop"] = params.stop_sequences;
  return j.dump();
}

Completion HttpLm::decode_response(std::string_view body) {
  Completion c;
  try {
    const json j = json::parse(body);
    c.text = j.at("text").get<std::string>();
    const std::string reason = j.value("finish_reason", std::string("length"));
    if (reason == "stop") {
      c.finish_reason = FinishReason::kStop;
    } else if (reason == "length") {
      c.finish_reason = FinishReason::kLength;
    } else {
      throw ParseError("unknown finish_reason '" + reason + "'", 0);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed completion response: ") + e.what(),
                     0);
  }
  return c;
}

Completion HttpLm::sample(std::string_view prompt, const DecodingParams& params,
                          Rng&) const {
  const std::string body = encode_request(prompt, params);
  impl_->in_flight.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{impl_->in_flight};

  httplib::Client client(impl_->url.base);
  client.set_connection_timeout(impl_->options.timeout);
  client.set_read_timeout(impl_->options.timeout);
  httplib::Headers headers;
  if (!impl_->token.empty()) {
    headers.emplace("Authorization", "Bearer " + impl_->token);
  }

  std::string last_error;
  auto backoff = impl_->options.initial_backoff;
  for (int attempt = 1; attempt <= impl_->options.attempts; ++attempt) {
    auto res = client.Post(impl_->url.path, headers, body, "application/json");
    if (res && res->status == 200) {
      try {
        return decode_response(res->body);
      } catch (const ParseError& e) {
        last_error = e.what();
      }
    } else if (res) {
      last_error = "HTTP " + std::to_string(res->status);
      if (!retryable(res->status)) break;
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < impl_->options.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw ProviderUnavailable("completion endpoint failed: " + last_error);
}

}  // namespace udg
