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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "srecycle/datamodel.hpp"
#include "srecycle/providers.hpp"

namespace srecycle {

enum class ReflectionKind { kInstruction, kResponse };

std::string_view to_string(ReflectionKind kind);

inline constexpr std::string_view kInstructionSlot = "{instruction}";
inline constexpr std::string_view kAnswerSlot = "{answer}";

inline constexpr std::string_view kNewInstructionMarker = "[New Instruction]";
inline constexpr std::string_view kNewAnswerMarker = "[New Answer]";
inline constexpr std::string_view kBetterAnswerMarker = "[Better Answer]";
inline constexpr std::string_view kEndMarker = "[End]";

// Teacher prompt for one reflection phase. The user template holds the
// {instruction} and {answer} slots exactly once each.
struct ReflectionPrompt {
  ReflectionKind kind = ReflectionKind::kInstruction;
  std::string system_prompt;
  std::string user_template;

  static ReflectionPrompt default_for(ReflectionKind kind);
  // Throws ConfigError when the slot invariant does not hold.
  static ReflectionPrompt make(ReflectionKind kind, std::string system_prompt,
                               std::string user_template);
  void validate() const;

  // Single-pass substitution: slot text inside the values is left alone.
  std::string render(std::string_view instruction, std::string_view answer) const;

  friend bool operator==(const ReflectionPrompt&,
                         const ReflectionPrompt&) = default;
};

struct ReflectionPrompts {
  ReflectionPrompt instruction = ReflectionPrompt::default_for(ReflectionKind::kInstruction);
  ReflectionPrompt response = ReflectionPrompt::default_for(ReflectionKind::kResponse);

  // Reads {instruction,response}.{system,user}.txt from `directory`; missing
  // files keep the defaults. Slots are validated here, at load time.
  static ReflectionPrompts load(const std::filesystem::path& directory);
};

// Case-insensitive search for `needle` at or after `from`.
std::size_t find_case_insensitive(std::string_view haystack,
                                  std::string_view needle, std::size_t from = 0);

// Trimmed text between the first case-insensitive `open_marker` and the next
// `close_marker` after it; nullopt when either is missing.
std::optional<std::string> parse_markers(std::string_view raw,
                                         std::string_view open_marker,
                                         std::string_view close_marker);

struct MarkerBlock {
  std::string text;  // trimmed
  bool terminated = true;
  bool repeated = false;  // another open marker follows the block
};

// parse_markers with recovery: with no close marker the block ends at
// `stop_marker` when given and present, otherwise at the end of the text.
std::optional<MarkerBlock> extract_block(std::string_view raw,
                                         std::string_view open_marker,
                                         std::string_view close_marker,
                                         std::string_view stop_marker = {});

struct ParsedReflection {
  ReflectionKind kind = ReflectionKind::kInstruction;
  std::optional<std::string> new_instruction;
  std::optional<std::string> new_answer;
  std::string raw;
  std::vector<std::string> warnings;
  int attempts = 0;

  bool ok() const {
    return new_answer && (kind == ReflectionKind::kResponse || new_instruction);
  }
};

ParsedReflection parse_reflection(ReflectionKind kind, std::string raw);

struct TeacherSettings {
  std::string model_id;
  double temperature = 1.0;
  int max_output_tokens = 2048;
  int max_regenerations = 2;
};

// One teacher call per attempt; re-generates up to max_regenerations times
// when the output does not parse. ProviderError propagates.
ParsedReflection reflect_instruction(const InstructionSample& sample,
                                     const ReflectionPrompt& prompt,
                                     const ChatProvider& teacher,
                                     const TeacherSettings& settings);

ParsedReflection reflect_response(const InstructionSample& sample,
                                  const ReflectionPrompt& prompt,
                                  const ChatProvider& teacher,
                                  const TeacherSettings& settings);

// One row of transcripts.jsonl.
struct TranscriptEntry {
  std::string id;
  int phase = 1;
  std::string raw;
  bool parsed_ok = false;
  int attempts = 0;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

nlohmann::json to_json_value(const TranscriptEntry& entry);

}  // namespace srecycle
