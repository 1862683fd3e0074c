// Copyright 2026 The srecycle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

#include "srecycle/providers.hpp"

namespace srecycle {

// An OpenAI-style API root, e.g. "https://api.openai.com/v1" or
// "http://127.0.0.1:8000/v1". Paths such as "/chat/completions" are appended.
struct HttpEndpoint {
  std::string base_url;
  std::string api_key;  // sent as a bearer token when non-empty
  std::chrono::seconds timeout{600};
};

// POSTs a JSON body and returns the parsed JSON reply. Connection failures,
// 429 and 5xx are retryable ProviderErrors; other statuses are not.
nlohmann::json post_json(const HttpEndpoint& endpoint, const std::string& path,
                         const nlohmann::json& body);

class OpenAIChatClient final : public ChatProvider {
 public:
  explicit OpenAIChatClient(HttpEndpoint endpoint)
      : endpoint_(std::move(endpoint)) {}
  std::string chat_complete(const ChatRequest& request) const override;

 private:
  HttpEndpoint endpoint_;
};

// Scores through a legacy completions endpoint with echo=true and prompt
// logprobs (vLLM and similar servers). Target tokens are the echoed prompt
// tokens whose text offset falls at or after the start of the target.
class EchoLogprobClient final : public LogprobProvider {
 public:
  explicit EchoLogprobClient(HttpEndpoint endpoint)
      : endpoint_(std::move(endpoint)) {}
  LogprobResponse score_logprobs(const LogprobRequest& request) const override;

 private:
  struct Echo {
    std::vector<std::optional<double>> logprobs;
    std::vector<std::size_t> offsets;  // in code points
  };
  Echo echo(const LogprobRequest& request, const std::string& prompt) const;

  HttpEndpoint endpoint_;
};

// A local inference server exposing the provider contract directly:
// POST {base}/logprobs {model, context, target, max_total_tokens}
//   -> {target_token_logprobs: [...], truncated: bool}
class LogprobRouteClient final : public LogprobProvider {
 public:
  explicit LogprobRouteClient(HttpEndpoint endpoint)
      : endpoint_(std::move(endpoint)) {}
  LogprobResponse score_logprobs(const LogprobRequest& request) const override;

 private:
  HttpEndpoint endpoint_;
};

class OpenAIEmbeddingClient final : public EmbeddingProvider {
 public:
  explicit OpenAIEmbeddingClient(HttpEndpoint endpoint)
      : endpoint_(std::move(endpoint)) {}
  Embedding embed(const EmbeddingRequest& request) const override;

 private:
  HttpEndpoint endpoint_;
};

// Joins context and target the way the echo adapter submits them: a single
// space is inserted when neither side supplies whitespace at the seam.
std::string join_for_echo(const std::string& context, const std::string& target);

std::size_t utf8_length(std::string_view text);

}  // namespace srecycle
