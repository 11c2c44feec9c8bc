// Copyright 2026 The Confra Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "confra/error.h"
#include "confra/prompting.h"
#include "httplib.h"
#include "json.hpp"
#include "test_util.h"

namespace confra {
namespace {

// Local server answering from a scripted list of status codes.
class FakeProvider {
 public:
  explicit FakeProvider(std::vector<int> statuses, std::string body)
      : statuses_(std::move(statuses)), body_(std::move(body)) {
    server_.Post(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard<std::mutex> lock(mu_);
      requests_.push_back(req.body);
      auth_.push_back(req.get_header_value("Authorization"));
      const std::size_t i = std::min(requests_.size() - 1, statuses_.size() - 1);
      res.status = statuses_[i];
      res.set_content(res.status == 200 ? body_ : "{\"error\": \"nope\"}",
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeProvider() {
    server_.stop();
    thread_.join();
  }

  std::string Url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }
  std::vector<std::string> requests() {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_;
  }
  std::vector<std::string> auth() {
    std::lock_guard<std::mutex> lock(mu_);
    return auth_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::vector<int> statuses_;
  std::string body_;
  std::mutex mu_;
  std::vector<std::string> requests_;
  std::vector<std::string> auth_;
};

constexpr char kOpenAiBody[] =
    R"({"choices": [{"message": {"role": "assistant", "content": "{\"is_conspiratorial\": false}"}}],
        "usage": {"prompt_tokens": 11, "completion_tokens": 7}})";

ModelConfig Config(const std::string& endpoint, Provider p = Provider::kOpenAi) {
  ModelConfig c;
  c.endpoint = endpoint;
  c.model = "test-model";
  c.provider = p;
  c.initial_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(2000);
  c.retry_budget = 3;
  c.api_key_env = "CONFRA_TEST_KEY";
  return c;
}

TEST(HttpClient, RetriesServerErrorsThenSucceeds) {
  FakeProvider server({500, 500, 200}, kOpenAiBody);
  HttpModelClient client(Config(server.Url("/v1/chat/completions")));
  const RawModelOutput raw = client.Complete("prompt", "m1", PromptStrategy::kFewShot);
  EXPECT_EQ(raw.attempts, 3);
  EXPECT_EQ(raw.response_text, "{\"is_conspiratorial\": false}");
  EXPECT_EQ(raw.prompt_tokens, 11);
  EXPECT_EQ(raw.completion_tokens, 7);
  EXPECT_EQ(raw.model_id, "test-model");
  EXPECT_EQ(raw.strategy, PromptStrategy::kFewShot);
  EXPECT_EQ(server.requests().size(), 3u);
}

TEST(HttpClient, ClientErrorsAreNotRetried) {
  FakeProvider server({401}, kOpenAiBody);
  HttpModelClient client(Config(server.Url("/v1/chat/completions")));
  try {
    client.Complete("p", "m1", PromptStrategy::kZeroShot);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.qualified_code(), "prompting.CLIENT_ERROR");
    EXPECT_NE(std::string(e.what()).find("401"), std::string::npos);
  }
  EXPECT_EQ(server.requests().size(), 1u);
}

TEST(HttpClient, RetryBudgetExhausted) {
  FakeProvider server({503}, kOpenAiBody);
  ModelConfig c = Config(server.Url("/x"));
  c.retry_budget = 2;
  HttpModelClient client(c);
  try {
    client.Complete("p", "m1", PromptStrategy::kZeroShot);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.qualified_code(), "prompting.TRANSPORT_FAILED");
  }
  EXPECT_EQ(server.requests().size(), 3u);
}

TEST(HttpClient, UnreachableEndpoint) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  ModelConfig c = Config("http://127.0.0.1:" + std::to_string(port) + "/v1");
  c.retry_budget = 1;
  HttpModelClient client(c);
  try {
    client.Complete("p", "m1", PromptStrategy::kZeroShot);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransportFailed);
  }
}

TEST(HttpClient, OpenAiRequestShapeAndBearer) {
  testing_util::ScopedEnv key("CONFRA_TEST_KEY", "sekrit");
  FakeProvider server({200}, kOpenAiBody);
  ModelConfig c = Config(server.Url("/v1/chat/completions"));
  c.temperature = 0.25;
  c.max_tokens = 300;
  HttpModelClient client(c);
  client.Complete("the prompt", "m1", PromptStrategy::kZeroShot);
  const auto body = nlohmann::json::parse(server.requests().at(0));
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "the prompt");
  EXPECT_EQ(body["temperature"], 0.25);
  EXPECT_EQ(body["max_tokens"], 300);
  EXPECT_EQ(server.auth().at(0), "Bearer sekrit");
}

TEST(HttpClient, OllamaShape) {
  FakeProvider server({200},
                      R"({"message": {"role": "assistant", "content": "hi"},
                          "prompt_eval_count": 5, "eval_count": 2})");
  HttpModelClient client(Config(server.Url("/api/chat"), Provider::kOllama));
  const RawModelOutput raw = client.Complete("p", "m1", PromptStrategy::kZeroShot);
  EXPECT_EQ(raw.response_text, "hi");
  EXPECT_EQ(raw.prompt_tokens, 5);
  EXPECT_EQ(raw.completion_tokens, 2);
  const auto body = nlohmann::json::parse(server.requests().at(0));
  EXPECT_EQ(body["stream"], false);
  EXPECT_EQ(body["options"]["num_predict"], 1024);
  EXPECT_FALSE(body.contains("max_tokens"));
  EXPECT_TRUE(server.auth().at(0).empty());
}

TEST(HttpClient, UnexpectedBodyIsKeptWhole) {
  FakeProvider server({200}, "plain text answer");
  HttpModelClient client(Config(server.Url("/x")));
  EXPECT_EQ(client.Complete("p", "m", PromptStrategy::kZeroShot).response_text,
            "plain text answer");
}

TEST(HttpClient, BadEndpointIsAConfigError) {
  HttpModelClient client(Config("ftp://nowhere"));
  try {
    client.Complete("p", "m", PromptStrategy::kZeroShot);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  }
}

TEST(HttpClient, ConcurrentAnnotationUsesEveryMessage) {
  FakeProvider server({200}, kOpenAiBody);
  auto client = MakeModelClient(Config(server.Url("/v1/chat/completions")));
  std::vector<Message> ms;
  for (int i = 0; i < 12; ++i) ms.push_back({"m" + std::to_string(i), "c", "t", "text"});
  const auto run = AnnotateMessages(ms, PromptStrategy::kZeroShot, {}, *client, 4);
  EXPECT_EQ(server.requests().size(), 12u);
  EXPECT_EQ(run.raw_outputs.size(), 12u);
  // The scripted answer lacks confidence, so every parse fails with a schema error.
  EXPECT_EQ(run.failures.size(), 12u);
  EXPECT_EQ(run.failures[0].code, "prompting.SCHEMA_VIOLATION");
}

}  // namespace
}  // namespace confra
