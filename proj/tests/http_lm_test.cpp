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

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace udg {
namespace {

using json = nlohmann::json;

class FakeEndpoint {
 public:
  explicit FakeEndpoint(int failures_before_success)
      : failures_(failures_before_success) {
    server_.Post("/v1/complete", [this](const httplib::Request& req,
                                        httplib::Response& res) {
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      if (calls_.fetch_add(1) < failures_) {
        res.status = 503;
        return;
      }
      res.set_content(R"({"text": "hello there", "finish_reason": "stop"})",
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/complete";
  }
  int calls() const { return calls_.load(); }
  std::string last_body_;
  std::string last_auth_;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int failures_;
  std::atomic<int> calls_{0};
};

HttpLmOptions fast_options(int attempts) {
  HttpLmOptions o;
  o.attempts = attempts;
  o.initial_backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(5);
  return o;
}

TEST(HttpLmTest, RequestEncoding) {
  DecodingParams d;
  d.top_k = 7;
  d.temperature = 0.5;
  d.max_new_tokens = 12;
  d.stop_sequences = {"\n\n"};
  const auto j = json::parse(HttpLm::encode_request("p", d));
  EXPECT_EQ(j["prompt"], "p");
  EXPECT_EQ(j["top_k"], 7);
  EXPECT_EQ(j["temperature"], 0.5);
  EXPECT_EQ(j["max_tokens"], 12);
  EXPECT_EQ(j["stop"], json::array({"\n\n"}));
}

TEST(HttpLmTest, ResponseDecoding) {
  const auto c = HttpLm::decode_response(R"({"text": "x", "finish_reason": "length"})");
  EXPECT_EQ(c.text, "x");
  EXPECT_EQ(c.finish_reason, FinishReason::kLength);
  EXPECT_THROW(HttpLm::decode_response("{"), ParseError);
  EXPECT_THROW(HttpLm::decode_response(R"({"finish_reason": "stop"})"),
               ParseError);
  EXPECT_THROW(HttpLm::decode_response(R"({"text": "", "finish_reason": "?"})"),
               ParseError);
}

TEST(HttpLmTest, RoundTripOverLoopback) {
  FakeEndpoint ep(0);
  HttpLm lm(ep.url(), "secret", fast_options(1));
  Rng rng(1);
  const auto c = lm.sample("Review:", DecodingParams{}, rng);
  EXPECT_EQ(c.text, "hello there");
  EXPECT_EQ(c.finish_reason, FinishReason::kStop);
  EXPECT_EQ(ep.last_auth_, "Bearer secret");
  EXPECT_EQ(json::parse(ep.last_body_)["prompt"], "Review:");
  EXPECT_FALSE(lm.supports_scoring());
}

TEST(HttpLmTest, RetriesServerErrors) {
  FakeEndpoint ep(2);
  HttpLm lm(ep.url(), "", fast_options(3));
  Rng rng(1);
  EXPECT_EQ(lm.sample("x", DecodingParams{}, rng).text, "hello there");
  EXPECT_EQ(ep.calls(), 3);
}

TEST(HttpLmTest, GivesUpAfterLastAttempt) {
  FakeEndpoint ep(10);
  HttpLm lm(ep.url(), "", fast_options(2));
  Rng rng(1);
  EXPECT_THROW(lm.sample("x", DecodingParams{}, rng), ProviderUnavailable);
  EXPECT_EQ(ep.calls(), 2);
}

TEST(HttpLmTest, UnreachableEndpoint) {
  // Port 9 on loopback: nothing listens there in the test sandbox.
  HttpLm lm("http://127.0.0.1:9/complete", "", fast_options(2));
  Rng rng(1);
  EXPECT_THROW(lm.sample("x", DecodingParams{}, rng), ProviderUnavailable);
}

TEST(HttpLmTest, Configuration) {
  EXPECT_THROW(HttpLm("https://example.invalid/x", ""), ProviderUnavailable);
  ::unsetenv("UDG_LM_ENDPOINT");
  EXPECT_THROW(HttpLm::from_env(), ProviderUnavailable);
}

}  // namespace
}  // namespace udg
