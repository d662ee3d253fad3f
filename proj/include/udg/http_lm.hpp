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

#ifndef UDG_HTTP_LM_HPP_
#define UDG_HTTP_LM_HPP_

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include "udg/lm.hpp"

namespace udg {

struct HttpLmOptions {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  int max_in_flight = 4;
  std::chrono::seconds timeout{60};
};

/// Completion-endpoint client.
///
/// Request body:  {"prompt", "max_tokens", "top_k", "temperature", "stop"}
/// Response body: {"text", "finish_reason": "stop" | "length"}
///
/// Transport errors, 429 and 5xx are retried with exponential backoff; any
/// failure after the last attempt surfaces as ProviderUnavailable. Only
/// plain http:// endpoints are supported.
class HttpLm final : public LanguageModel {
 public:
  HttpLm(std::string endpoint, std::string bearer_token,
         HttpLmOptions options = {});
  ~HttpLm() override;

  /// Reads UDG_LM_ENDPOINT and UDG_LM_TOKEN. Throws ProviderUnavailable when
  /// the endpoint variable is unset.
  static std::unique_ptr<HttpLm> from_env(HttpLmOptions options = {});

  Completion sample(std::string_view prompt, const DecodingParams& params,
                    Rng& rng) const override;
  std::string name() const override { return "http"; }

  static std::string encode_request(std::string_view prompt,
                                    const DecodingParams& params);
  /// Throws ParseError on a malformed body.
  static Completion decode_response(std::string_view body);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace udg

#endif  // UDG_HTTP_LM_HPP_
