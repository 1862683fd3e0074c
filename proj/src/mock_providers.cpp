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

#include "srecycle/mock_providers.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "srecycle/datamodel.hpp"
#include "srecycle/errors.hpp"

namespace srecycle {

using nlohmann::json;

std::vector<std::string> mock_tokenize(std::string_view text,
                                       const std::vector<std::string>& ignored) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) {
      std::string token(text.substr(start, i - start));
      if (std::find(ignored.begin(), ignored.end(), token) == ignored.end()) {
        tokens.push_back(std::move(token));
      }
    }
  }
  return tokens;
}

LogprobTable LogprobTable::constant(double logprob) {
  LogprobTable table;
  table.unconditional_default = logprob;
  return table;
}

LogprobTable LogprobTable::from_json(const json& j) {
  LogprobTable table;
  table.unconditional =
      j.value("unconditional", std::map<std::string, double>{});
  table.unconditional_default = j.value("unconditional_default", -1.0);
  table.conditional = j.value("conditional", std::map<std::string, double>{});
  if (auto it = j.find("conditional_default"); it != j.end() && !it->is_null()) {
    table.conditional_default = it->get<double>();
  }
  for (const auto& rule : j.value("rules", json::array())) {
    ContextRule parsed;
    parsed.context_contains = rule.at("context_contains").get<std::string>();
    parsed.logprobs = rule.value("logprobs", std::map<std::string, double>{});
    if (auto it = rule.find("default"); it != rule.end() && !it->is_null()) {
      parsed.default_logprob = it->get<double>();
    }
    table.rules.push_back(std::move(parsed));
  }
  table.ignored_tokens =
      j.value("ignored_tokens", std::vector<std::string>{});
  return table;
}

json LogprobTable::to_json() const {
  json j{{"unconditional", unconditional},
         {"unconditional_default", unconditional_default},
         {"conditional", conditional},
         {"ignored_tokens", ignored_tokens}};
  if (conditional_default) j["conditional_default"] = *conditional_default;
  json rules_json = json::array();
  for (const auto& rule : rules) {
    json r{{"context_contains", rule.context_contains},
           {"logprobs", rule.logprobs}};
    if (rule.default_logprob) r["default"] = *rule.default_logprob;
    rules_json.push_back(std::move(r));
  }
  j["rules"] = std::move(rules_json);
  return j;
}

bool LogprobTable::context_free() const {
  return conditional.empty() && !conditional_default && rules.empty();
}

double LogprobTable::lookup(const std::string& token, bool has_context,
                            std::string_view context) const {
  if (has_context) {
    for (const auto& rule : rules) {
      if (context.find(rule.context_contains) == std::string_view::npos) continue;
      if (auto it = rule.logprobs.find(token); it != rule.logprobs.end()) {
        return it->second;
      }
      if (rule.default_logprob) return *rule.default_logprob;
      break;
    }
    if (auto it = conditional.find(token); it != conditional.end()) {
      return it->second;
    }
    if (conditional_default) return *conditional_default;
  }
  if (auto it = unconditional.find(token); it != unconditional.end()) {
    return it->second;
  }
  return unconditional_default;
}

LogprobResponse TableLogprobModel::score_logprobs(
    const LogprobRequest& request) const {
  request.validate();
  auto context_tokens = mock_tokenize(request.context, table_.ignored_tokens);
  auto target_tokens = mock_tokenize(request.target, table_.ignored_tokens);
  if (target_tokens.empty()) {
    throw EmptyTargetError("target has no tokens after tokenization");
  }

  const std::size_t budget = static_cast<std::size_t>(request.max_total_tokens);
  LogprobResponse response;
  std::string retained_context = request.context;
  if (target_tokens.size() >= budget) {
    response.truncated =
        target_tokens.size() > budget || !context_tokens.empty();
    target_tokens.resize(budget);
    context_tokens.clear();
    retained_context.clear();
  } else if (context_tokens.size() + target_tokens.size() > budget) {
    response.truncated = true;
    const std::size_t keep = budget - target_tokens.size();
    context_tokens.erase(context_tokens.begin(),
                         context_tokens.end() - static_cast<std::ptrdiff_t>(keep));
    retained_context.clear();
    for (const auto& token : context_tokens) {
      if (!retained_context.empty()) retained_context.push_back(' ');
      retained_context += token;
    }
  }

  const bool has_context = !context_tokens.empty();
  response.target_token_logprobs.reserve(target_tokens.size());
  for (const auto& token : target_tokens) {
    response.target_token_logprobs.push_back(
        table_.lookup(token, has_context, retained_context));
  }
  return response;
}

ScriptedChatModel::ScriptedChatModel(std::vector<CannedReply> replies,
                                     std::vector<std::string> fallback)
    : replies_(std::move(replies)), fallback_(std::move(fallback)) {}

ScriptedChatModel ScriptedChatModel::from_json(const json& j) {
  std::vector<CannedReply> replies;
  for (const auto& reply : j.value("replies", json::array())) {
    CannedReply parsed;
    parsed.when_contains =
        reply.value("when_contains", std::vector<std::string>{});
    if (reply.contains("completion")) {
      parsed.completions.push_back(reply.at("completion").get<std::string>());
    } else {
      parsed.completions =
          reply.at("completions").get<std::vector<std::string>>();
    }
    replies.push_back(std::move(parsed));
  }
  std::vector<std::string> fallback;
  if (auto it = j.find("default"); it != j.end()) {
    fallback = it->is_string() ? std::vector<std::string>{it->get<std::string>()}
                               : it->get<std::vector<std::string>>();
  }
  return ScriptedChatModel(std::move(replies), std::move(fallback));
}

ScriptedChatModel ScriptedChatModel::always(std::string completion) {
  return ScriptedChatModel({}, {std::move(completion)});
}

namespace {

const std::string& pick(const std::vector<std::string>& completions,
                        int regeneration) {
  const std::size_t index = std::min<std::size_t>(
      static_cast<std::size_t>(std::max(regeneration, 0)), completions.size() - 1);
  return completions[index];
}

std::string limit_tokens(const std::string& text, int max_tokens) {
  std::size_t i = 0;
  int seen = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    if (seen == max_tokens) {
      std::string cut = text.substr(0, i);
      while (!cut.empty() && std::isspace(static_cast<unsigned char>(cut.back()))) {
        cut.pop_back();
      }
      return cut + std::string(kTruncationMarker);
    }
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    ++seen;
  }
  return text;
}

}  // namespace

std::string ScriptedChatModel::chat_complete(const ChatRequest& request) const {
  request.validate();
  const std::string haystack = request.system_prompt + "\n" + request.user_prompt;
  const std::vector<std::string>* completions = nullptr;
  for (const auto& reply : replies_) {
    bool matches = std::all_of(
        reply.when_contains.begin(), reply.when_contains.end(),
        [&](const std::string& needle) {
          return haystack.find(needle) != std::string::npos;
        });
    if (matches && !reply.completions.empty()) {
      completions = &reply.completions;
      break;
    }
  }
  if (!completions && !fallback_.empty()) completions = &fallback_;
  if (!completions) return {};
  return limit_tokens(pick(*completions, request.regeneration),
                      request.max_output_tokens);
}

Embedding HashingEmbeddingModel::embed(const EmbeddingRequest& request) const {
  request.validate();
  Embedding vector(dimension_, 0.0);
  auto bucket = [&](std::string_view token) {
    std::uint64_t hash = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : token) {
      hash ^= c;
      hash *= 1099511628211ULL;
    }
    const double sign = (hash >> 63) ? 1.0 : -1.0;
    vector[hash % dimension_] += sign;
  };
  std::string word;
  for (char c : request.text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!word.empty()) {
      bucket(word);
      word.clear();
    }
  }
  if (!word.empty()) bucket(word);
  if (std::all_of(vector.begin(), vector.end(), [](double v) { return v == 0.0; })) {
    bucket(request.text);
  }
  normalize_in_place(vector);
  return vector;
}

MockFixture MockFixture::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(
        fmt::format("mock fixture {} is malformed: {}", path.string(), e.what()));
  }
  MockFixture fixture;
  if (j.contains("logprobs")) fixture.logprobs = LogprobTable::from_json(j["logprobs"]);
  if (j.contains("chat")) fixture.chat = j["chat"];
  if (j.contains("embeddings")) {
    fixture.embedding_dim = j["embeddings"].value("dim", std::size_t{64});
  }
  return fixture;
}

}  // namespace srecycle
