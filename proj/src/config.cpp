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

#include "srecycle/config.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "srecycle/datamodel.hpp"
#include "srecycle/errors.hpp"
#include "srecycle/hashing.hpp"
#include "srecycle/pipeline.hpp"
#include "srecycle/scoring.hpp"

namespace srecycle {

using nlohmann::json;

namespace {

json block_json(const ProviderBlock& block) {
  return json{{"backend", block.backend},
              {"base_url", block.base_url},
              {"model_id", block.model_id},
              {"api_key_env", block.api_key_env},
              {"mock_fixture", block.mock_fixture}};
}

template <typename T>
T field(const json& tree, std::string_view key, std::string_view path) {
  try {
    return tree.at(std::string(key)).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config key {}{} has the wrong type", path, key));
  }
}

void read_block(const json& tree, std::string_view path, ProviderBlock& block) {
  block.backend = field<std::string>(tree, "backend", path);
  block.base_url = field<std::string>(tree, "base_url", path);
  block.model_id = field<std::string>(tree, "model_id", path);
  block.api_key_env = field<std::string>(tree, "api_key_env", path);
  block.mock_fixture = field<std::string>(tree, "mock_fixture", path);
}

const json& default_tree() {
  static const json tree = to_json_value(RunConfig{});
  return tree;
}

const json& default_block() {
  static const json tree = block_json(ProviderBlock{});
  return tree;
}

// Overlays `user` on `base`, rejecting keys `base` does not know.
void merge_known(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) {
    throw ConfigError(fmt::format("config section {} must be a table", path));
  }
  for (const auto& [key, value] : user.items()) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError(fmt::format("unknown config key {}", full));
    json& slot = base[key];
    if (full == "embeddings" && slot.is_null() && value.is_object()) {
      slot = default_block();
    }
    if (slot.is_object() && !value.is_null()) {
      merge_known(slot, value, full);
    } else {
      slot = value;
    }
  }
}

void check_backend(const ProviderBlock& block, std::string_view name,
                   std::initializer_list<std::string_view> allowed) {
  if (std::find(allowed.begin(), allowed.end(), block.backend) == allowed.end()) {
    std::string list;
    for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    throw ConfigError(fmt::format("{}.backend \"{}\" is not one of: {}", name,
                                  block.backend, list));
  }
}

std::string strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == '\\' && quote == '"') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

std::string unquote_key(std::string_view key, std::size_t line_no) {
  key = trim(key);
  if (key.size() >= 2 && (key.front() == '"' || key.front() == '\'') &&
      key.back() == key.front()) {
    return std::string(key.substr(1, key.size() - 2));
  }
  const bool bare = !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
  if (!bare) throw ConfigError(fmt::format("line {}: invalid key \"{}\"", line_no, key));
  return std::string(key);
}

json parse_toml_value(std::string_view raw, std::size_t line_no) {
  const std::string_view value = trim(raw);
  if (value.empty()) throw ConfigError(fmt::format("line {}: missing value", line_no));
  if (value.front() == '\'') {
    if (value.size() < 2 || value.back() != '\'') {
      throw ConfigError(fmt::format("line {}: unterminated string", line_no));
    }
    return std::string(value.substr(1, value.size() - 2));
  }
  if (value.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < value.size() && value[i] != '"'; ++i) {
      if (value[i] != '\\') {
        out += value[i];
        continue;
      }
      if (++i >= value.size()) break;
      switch (value[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default:
          throw ConfigError(fmt::format("line {}: unsupported escape \\{}", line_no,
                                        value[i]));
      }
    }
    if (i != value.size() - 1) {
      throw ConfigError(fmt::format("line {}: malformed string", line_no));
    }
    return out;
  }
  if (value == "true") return true;
  if (value == "false") return false;
  std::string number(value);
  number.erase(std::remove(number.begin(), number.end(), '_'), number.end());
  json parsed = json::parse(number, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_number()) {
    throw ConfigError(fmt::format("line {}: unsupported value \"{}\"", line_no, value));
  }
  return parsed;
}

std::vector<std::string> split_dotted(std::string_view path, std::size_t line_no) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    parts.push_back(unquote_key(path.substr(start, dot - start), line_no));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

}  // namespace

void RunConfig::validate() const {
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (scorer.max_total_tokens < kMinTotalTokens) {
    throw ConfigError(fmt::format("scorer.max_total_tokens must be >= {}",
                                  kMinTotalTokens));
  }
  if (!(teacher.temperature >= 0.0)) throw ConfigError("teacher.temperature must be >= 0");
  if (!(judge.temperature >= 0.0)) throw ConfigError("judge.temperature must be >= 0");
  if (teacher.max_output_tokens < 1 || judge.max_output_tokens < 1) {
    throw ConfigError("max_output_tokens must be >= 1");
  }
  if (teacher.max_regenerations < 0) {
    throw ConfigError("teacher.max_regenerations must be >= 0");
  }
  if (retry_max_attempts < 1) throw ConfigError("retry_max_attempts must be >= 1");
  if (retry_initial_backoff_ms < 0) {
    throw ConfigError("retry_initial_backoff_ms must be >= 0");
  }
  if (!dataset_format.empty()) parse_dataset_format(dataset_format);
  check_backend(teacher, "teacher", {"mock", "openai"});
  check_backend(judge, "judge", {"mock", "openai"});
  check_backend(scorer, "scorer", {"mock", "openai_echo", "local_route"});
  if (embeddings) check_backend(*embeddings, "embeddings", {"mock", "openai"});
  const SelectionStrategy parsed = parse_strategy(strategy, seed);
  if (needs_embeddings(parsed) && !embeddings) {
    throw ConfigError(fmt::format(
        "strategy {} requires an [embeddings] provider block", strategy));
  }
  PromptTemplates templates;
  if (!conditional_wrapper.empty()) templates.conditional_wrapper = conditional_wrapper;
  if (!reverse_query_wrapper.empty()) {
    templates.reverse_query_wrapper = reverse_query_wrapper;
  }
  templates.validate();
}

std::string RunConfig::hash() const {
  json tree = to_json_value(*this);
  for (const char* key : {"output_dir", "cache_dir", "parallelism", "offline",
                          "retry_max_attempts", "retry_initial_backoff_ms"}) {
    tree.erase(key);
  }
  return sha256_hex(tree.dump());
}

json to_json_value(const RunConfig& config) {
  json teacher = block_json(config.teacher);
  teacher["temperature"] = config.teacher.temperature;
  teacher["max_output_tokens"] = config.teacher.max_output_tokens;
  teacher["max_regenerations"] = config.teacher.max_regenerations;
  json scorer = block_json(config.scorer);
  scorer["max_total_tokens"] = config.scorer.max_total_tokens;
  json judge = block_json(config.judge);
  judge["temperature"] = config.judge.temperature;
  judge["max_output_tokens"] = config.judge.max_output_tokens;
  return json{
      {"dataset_path", config.dataset_path},
      {"dataset_format", config.dataset_format},
      {"output_dir", config.output_dir},
      {"cache_dir", config.cache_dir},
      {"teacher", teacher},
      {"scorer", scorer},
      {"embeddings", config.embeddings ? block_json(*config.embeddings) : json(nullptr)},
      {"judge", judge},
      {"strategy", config.strategy},
      {"parallelism", config.parallelism},
      {"seed", config.seed},
      {"prompt_overrides_dir", config.prompt_overrides_dir},
      {"conditional_wrapper", config.conditional_wrapper},
      {"reverse_query_wrapper", config.reverse_query_wrapper},
      {"include_truncated_in_stats", config.include_truncated_in_stats},
      {"exclude_ifd_above_one", config.exclude_ifd_above_one},
      {"offline", config.offline},
      {"retry_max_attempts", config.retry_max_attempts},
      {"retry_initial_backoff_ms", config.retry_initial_backoff_ms},
  };
}

RunConfig run_config_from_json(const json& j) {
  json tree = default_tree();
  merge_known(tree, j, "");

  RunConfig config;
  config.dataset_path = field<std::string>(tree, "dataset_path", "");
  config.dataset_format = field<std::string>(tree, "dataset_format", "");
  config.output_dir = field<std::string>(tree, "output_dir", "");
  config.cache_dir = field<std::string>(tree, "cache_dir", "");

  const json& teacher = tree["teacher"];
  read_block(teacher, "teacher.", config.teacher);
  config.teacher.temperature = field<double>(teacher, "temperature", "teacher.");
  config.teacher.max_output_tokens = field<int>(teacher, "max_output_tokens", "teacher.");
  config.teacher.max_regenerations = field<int>(teacher, "max_regenerations", "teacher.");

  const json& scorer = tree["scorer"];
  read_block(scorer, "scorer.", config.scorer);
  config.scorer.max_total_tokens = field<int>(scorer, "max_total_tokens", "scorer.");

  if (!tree["embeddings"].is_null()) {
    ProviderBlock block;
    read_block(tree["embeddings"], "embeddings.", block);
    config.embeddings = block;
  }

  const json& judge = tree["judge"];
  read_block(judge, "judge.", config.judge);
  config.judge.temperature = field<double>(judge, "temperature", "judge.");
  config.judge.max_output_tokens = field<int>(judge, "max_output_tokens", "judge.");

  config.strategy = field<std::string>(tree, "strategy", "");
  config.parallelism = field<int>(tree, "parallelism", "");
  config.seed = field<std::uint64_t>(tree, "seed", "");
  config.prompt_overrides_dir = field<std::string>(tree, "prompt_overrides_dir", "");
  config.conditional_wrapper = field<std::string>(tree, "conditional_wrapper", "");
  config.reverse_query_wrapper = field<std::string>(tree, "reverse_query_wrapper", "");
  config.include_truncated_in_stats =
      field<bool>(tree, "include_truncated_in_stats", "");
  config.exclude_ifd_above_one = field<bool>(tree, "exclude_ifd_above_one", "");
  config.offline = field<bool>(tree, "offline", "");
  config.retry_max_attempts = field<int>(tree, "retry_max_attempts", "");
  config.retry_initial_backoff_ms = field<int>(tree, "retry_initial_backoff_ms", "");
  return config;
}

json parse_toml_subset(std::string_view text) {
  json root = json::object();
  json* table = &root;
  std::istringstream lines{std::string(text)};
  std::string raw_line;
  std::size_t line_no = 0;
  while (std::getline(lines, raw_line)) {
    ++line_no;
    const std::string stripped = strip_comment(raw_line);
    const std::string_view line = trim(stripped);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.starts_with("[[")) {
        throw ConfigError(fmt::format("line {}: unsupported table header", line_no));
      }
      table = &root;
      for (const auto& part : split_dotted(line.substr(1, line.size() - 2), line_no)) {
        json& next = (*table)[part];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) {
          throw ConfigError(fmt::format("line {}: {} is not a table", line_no, part));
        }
        table = &next;
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    }
    const auto parts = split_dotted(trim(line.substr(0, eq)), line_no);
    json* target = table;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      json& next = (*target)[parts[i]];
      if (next.is_null()) next = json::object();
      target = &next;
    }
    if (target->contains(parts.back())) {
      throw ConfigError(fmt::format("line {}: duplicate key {}", line_no, parts.back()));
    }
    (*target)[parts.back()] = parse_toml_value(line.substr(eq + 1), line_no);
  }
  return root;
}

json load_config_tree(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  if (path.extension() == ".toml") return parse_toml_subset(text);
  json tree = json::parse(text, nullptr, false);
  if (tree.is_discarded()) {
    throw ConfigError(fmt::format("{} is not valid JSON", path.string()));
  }
  return tree;
}

void apply_overrides(json& tree, const std::vector<std::string>& overrides) {
  for (std::string_view item : overrides) {
    if (item.starts_with("--")) item.remove_prefix(2);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ConfigError(fmt::format("override \"{}\" is not key=value", item));
    }
    const std::string_view value = item.substr(eq + 1);
    json* node = &tree;
    const auto parts = split_dotted(item.substr(0, eq), 0);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      json& next = (*node)[parts[i]];
      if (next.is_null()) next = json::object();
      node = &next;
    }
    json& slot = (*node)[parts.back()];
    json literal = json::parse(value, nullptr, false);
    if (slot.is_string() || literal.is_discarded()) {
      slot = std::string(value);
    } else {
      slot = std::move(literal);
    }
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::string>& overrides) {
  json tree = default_tree();
  if (path) merge_known(tree, load_config_tree(*path), "");
  apply_overrides(tree, overrides);
  RunConfig config = run_config_from_json(tree);
  config.validate();
  return config;
}

}  // namespace srecycle
