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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace srecycle {

// Where a model service lives. backend is "mock" or an HTTP flavour:
// chat and embeddings use "openai"; the scorer uses "openai_echo" or
// "local_route".
struct ProviderBlock {
  std::string backend = "mock";
  std::string base_url;
  std::string model_id;
  std::string api_key_env;   // name of the variable holding the key
  std::string mock_fixture;  // fixture file for the mock backend

  bool is_mock() const { return backend == "mock"; }
};

struct TeacherBlock : ProviderBlock {
  double temperature = 1.0;
  int max_output_tokens = 2048;
  int max_regenerations = 2;
};

struct ScorerBlock : ProviderBlock {
  int max_total_tokens = 2048;
};

struct JudgeBlock : ProviderBlock {
  double temperature = 0.0;
  int max_output_tokens = 1024;
};

struct RunConfig {
  std::string dataset_path;
  std::string dataset_format;  // "", "json_array" or "jsonl"
  std::string output_dir;
  std::string cache_dir;
  TeacherBlock teacher;
  ScorerBlock scorer;
  std::optional<ProviderBlock> embeddings;
  JudgeBlock judge;
  std::string strategy = "selective";
  int parallelism = 1;
  std::uint64_t seed = 0;
  std::string prompt_overrides_dir;
  std::string conditional_wrapper;    // empty: built-in default
  std::string reverse_query_wrapper;  // empty: built-in default
  bool include_truncated_in_stats = false;
  bool exclude_ifd_above_one = false;
  bool offline = false;
  int retry_max_attempts = 5;
  int retry_initial_backoff_ms = 1000;

  // Range checks and cross-field rules. Throws ConfigError.
  void validate() const;

  // SHA-256 of the canonical config minus fields that cannot change
  // results (output_dir, cache_dir, parallelism, offline).
  std::string hash() const;
};

nlohmann::json to_json_value(const RunConfig& config);
// Unknown keys are rejected. Throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);

// Parses the subset of TOML used by config files: [table] and [a.b]
// headers, bare or quoted keys, and string, integer, float and boolean
// values. Throws ConfigError with a line number.
nlohmann::json parse_toml_subset(std::string_view text);

// Reads a .json or .toml file into a JSON tree.
nlohmann::json load_config_tree(const std::filesystem::path& path);

// Applies "dotted.key=value" overrides. Values that parse as JSON literals
// keep their type; anything else is a string.
void apply_overrides(nlohmann::json& tree, const std::vector<std::string>& overrides);

// Optional file, then overrides, then validation.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::string>& overrides);

}  // namespace srecycle
