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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "srecycle/providers.hpp"

namespace srecycle {

// Whitespace tokenizer used by every mock; tokens listed in `ignored` vanish.
std::vector<std::string> mock_tokenize(std::string_view text,
                                       const std::vector<std::string>& ignored);

// Overrides applied when the (retained) context contains a substring.
struct ContextRule {
  std::string context_contains;
  std::map<std::string, double> logprobs;
  std::optional<double> default_logprob;
};

// Table-driven language model. Lookup order for a token:
//   no context:   unconditional[token], else unconditional_default
//   with context: first matching rule (token entry, then its default),
//                 then conditional[token], conditional_default,
//                 and finally the unconditional entries.
struct LogprobTable {
  std::map<std::string, double> unconditional;
  double unconditional_default = -1.0;
  std::map<std::string, double> conditional;
  std::optional<double> conditional_default;
  std::vector<ContextRule> rules;
  std::vector<std::string> ignored_tokens;

  static LogprobTable constant(double logprob);
  static LogprobTable from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // True when logprobs never depend on the context.
  bool context_free() const;
  double lookup(const std::string& token, bool has_context,
                std::string_view context) const;
};

class TableLogprobModel final : public LogprobProvider {
 public:
  explicit TableLogprobModel(LogprobTable table) : table_(std::move(table)) {}

  // Context is truncated from the left to fit max_total_tokens; a target that
  // alone exceeds the budget is cut from the right.
  LogprobResponse score_logprobs(const LogprobRequest& request) const override;

  const LogprobTable& table() const { return table_; }

 private:
  LogprobTable table_;
};

inline constexpr std::string_view kTruncationMarker = " [truncated]";

struct CannedReply {
  std::vector<std::string> when_contains;  // all must appear in system+user
  std::vector<std::string> completions;    // indexed by regeneration, clamped
};

class ScriptedChatModel final : public ChatProvider {
 public:
  ScriptedChatModel(std::vector<CannedReply> replies,
                    std::vector<std::string> fallback = {});

  static ScriptedChatModel from_json(const nlohmann::json& j);
  static ScriptedChatModel always(std::string completion);

  std::string chat_complete(const ChatRequest& request) const override;

 private:
  std::vector<CannedReply> replies_;
  std::vector<std::string> fallback_;
};

// Feature-hashed bag of words, L2-normalized.
class HashingEmbeddingModel final : public EmbeddingProvider {
 public:
  explicit HashingEmbeddingModel(std::size_t dimension = 64)
      : dimension_(dimension) {}

  Embedding embed(const EmbeddingRequest& request) const override;

 private:
  std::size_t dimension_;
};

// The fixture file behind the CLI's "mock" backend:
// {"logprobs": {...}, "chat": {"replies": [...], "default": [...]},
//  "embeddings": {"dim": 64}}
struct MockFixture {
  LogprobTable logprobs;
  nlohmann::json chat = nlohmann::json::object();
  std::size_t embedding_dim = 64;

  static MockFixture load(const std::filesystem::path& path);
};

}  // namespace srecycle
