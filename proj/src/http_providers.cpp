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

#include "srecycle/http_providers.hpp"

#include <cctype>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>

#include "srecycle/errors.hpp"

namespace srecycle {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& base_url) {
  static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch match;
  if (!std::regex_match(base_url, match, pattern)) {
    throw ConfigError(fmt::format("invalid base_url \"{}\"", base_url));
  }
  SplitUrl out{match[1].str(), match[2].str()};
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

std::size_t byte_offset_of(std::string_view text, std::size_t code_points) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      if (seen == code_points) return i;
      ++seen;
    }
  }
  return text.size();
}

}  // namespace

std::size_t utf8_length(std::string_view text) {
  std::size_t count = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++count;
  }
  return count;
}

std::string join_for_echo(const std::string& context, const std::string& target) {
  if (context.empty()) return target;
  const bool seam_has_space =
      std::isspace(static_cast<unsigned char>(context.back())) ||
      std::isspace(static_cast<unsigned char>(target.front()));
  return seam_has_space ? context + target : context + " " + target;
}

json post_json(const HttpEndpoint& endpoint, const std::string& path,
               const json& body) {
  const SplitUrl url = split_url(endpoint.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(std::chrono::seconds{10});
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  }
  auto result = client.Post(url.prefix + path, headers, body.dump(),
                            "application/json");
  if (!result) {
    throw ProviderError(fmt::format("POST {}{}: {}", endpoint.base_url, path,
                                    httplib::to_string(result.error())),
                        true);
  }
  const int status = result->status;
  if (status == 429 || status >= 500) {
    throw ProviderError(
        fmt::format("POST {}{}: HTTP {}", endpoint.base_url, path, status), true);
  }
  if (status < 200 || status >= 300) {
    throw ProviderError(fmt::format("POST {}{}: HTTP {}: {}", endpoint.base_url,
                                    path, status, result->body.substr(0, 512)),
                        false);
  }
  try {
    return json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw ProviderError(fmt::format("POST {}{}: malformed JSON reply: {}",
                                    endpoint.base_url, path, e.what()),
                        false);
  }
}

std::string OpenAIChatClient::chat_complete(const ChatRequest& request) const {
  request.validate();
  json messages = json::array();
  if (!request.system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  json body{{"model", request.model_id},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_output_tokens}};
  json reply = post_json(endpoint_, "/chat/completions", body);
  try {
    const json& message = reply.at("choices").at(0).at("message");
    auto content = message.find("content");
    if (content == message.end() || content->is_null()) return {};
    return content->get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(
        fmt::format("chat reply has an unexpected shape: {}", e.what()), false);
  }
}

EchoLogprobClient::Echo EchoLogprobClient::echo(const LogprobRequest& request,
                                                const std::string& prompt) const {
  json body{{"model", request.model_id}, {"prompt", prompt}, {"max_tokens", 1},
            {"temperature", 0},          {"echo", true},     {"logprobs", 0}};
  json reply = post_json(endpoint_, "/completions", body);
  Echo out;
  try {
    const json& logprobs = reply.at("choices").at(0).at("logprobs");
    const json& values = logprobs.at("token_logprobs");
    const json& offsets = logprobs.at("text_offset");
    if (values.size() != offsets.size()) {
      throw ProviderError("echo reply has misaligned logprobs and offsets", false);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      out.logprobs.push_back(values[i].is_null()
                                 ? std::nullopt
                                 : std::optional<double>(values[i].get<double>()));
      out.offsets.push_back(offsets[i].get<std::size_t>());
    }
  } catch (const json::exception& e) {
    throw ProviderError(
        fmt::format("echo reply has an unexpected shape: {}", e.what()), false);
  }
  return out;
}

LogprobResponse EchoLogprobClient::score_logprobs(
    const LogprobRequest& request) const {
  request.validate();
  const std::size_t budget = static_cast<std::size_t>(request.max_total_tokens);

  auto attempt = [&](const std::string& context, bool truncated) {
    const std::string prompt = join_for_echo(context, request.target);
    const std::size_t prompt_len = utf8_length(prompt);
    // A separator space we inserted belongs to the first target token, as in
    // tokenizers that attach leading whitespace to the following word.
    const std::size_t inserted = prompt.size() - context.size() - request.target.size();
    const std::size_t target_start = prompt_len - utf8_length(request.target) - inserted;
    Echo echoed = echo(request, prompt);
    std::vector<std::size_t> context_positions;
    LogprobResponse response;
    response.truncated = truncated;
    for (std::size_t i = 0; i < echoed.offsets.size(); ++i) {
      const std::size_t offset = echoed.offsets[i];
      if (offset >= prompt_len) break;  // generated continuation
      if (offset < target_start) {
        context_positions.push_back(offset);
      } else if (echoed.logprobs[i]) {
        response.target_token_logprobs.push_back(*echoed.logprobs[i]);
      }
    }
    return std::pair{std::move(response), std::move(context_positions)};
  };

  auto [response, context_positions] = attempt(request.context, false);
  const std::size_t n_context = context_positions.size();
  const std::size_t n_target = response.target_token_logprobs.size();
  if (n_context + n_target > budget) {
    if (n_target >= budget) {
      auto [bare, unused] = attempt(std::string{}, true);
      bare.target_token_logprobs.resize(
          std::min(bare.target_token_logprobs.size(), budget));
      response = std::move(bare);
    } else {
      const std::size_t keep = budget - n_target;
      const std::size_t cut_at = context_positions[n_context - keep];
      std::string kept =
          request.context.substr(byte_offset_of(request.context, cut_at));
      response = attempt(kept, true).first;
    }
  }
  if (response.target_token_logprobs.empty()) {
    throw EmptyTargetError("echo scoring retained zero target tokens");
  }
  return response;
}

LogprobResponse LogprobRouteClient::score_logprobs(
    const LogprobRequest& request) const {
  request.validate();
  json body{{"model", request.model_id},
            {"context", request.context},
            {"target", request.target},
            {"max_total_tokens", request.max_total_tokens}};
  json reply = post_json(endpoint_, "/logprobs", body);
  LogprobResponse response;
  try {
    response = logprob_response_from_json(reply);
  } catch (const json::exception& e) {
    throw ProviderError(
        fmt::format("logprob reply has an unexpected shape: {}", e.what()), false);
  }
  if (response.target_token_logprobs.empty()) {
    throw EmptyTargetError("logprob route retained zero target tokens");
  }
  return response;
}

Embedding OpenAIEmbeddingClient::embed(const EmbeddingRequest& request) const {
  request.validate();
  json reply = post_json(endpoint_, "/embeddings",
                         json{{"model", request.model_id}, {"input", request.text}});
  Embedding vector;
  try {
    vector = reply.at("data").at(0).at("embedding").get<Embedding>();
  } catch (const json::exception& e) {
    throw ProviderError(
        fmt::format("embedding reply has an unexpected shape: {}", e.what()), false);
  }
  normalize_in_place(vector);
  return vector;
}

}  // namespace srecycle
