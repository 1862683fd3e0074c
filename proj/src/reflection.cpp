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

#include "srecycle/reflection.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "srecycle/errors.hpp"
#include "srecycle/hashing.hpp"
#include "srecycle/scoring.hpp"

namespace srecycle {

namespace {

constexpr std::string_view kInstructionSystem =
    "You are a helpful, precise but picky assistant for checking the quality "
    "of a given instruction.";

constexpr std::string_view kInstructionUser =
    "[Instruction]\n"
    "{instruction}\n"
    "[The Start of Answer]\n"
    "{answer}\n"
    "[The End of Answer]\n"
    "\n"
    "We would like you to answer several questions related to the quality of "
    "a given instruction.\n"
    "1. Why this instruction is not good? First analyze the instruction based "
    "on the Complexity of the Topic, Level of Detail Required, Knowledge "
    "Required, Ambiguity of the Instruction and Logical Reasoning or "
    "Problem-Solving Involved. Then analyze why this answer is not good for "
    "the given instruction based on the Helpfulness, Relevance, Accuracy and "
    "Level of Details. Finally, analyze why this bad instruction leads to a "
    "bad answer.\n"
    "2. Based on the reason you provided, generate a new and complete "
    "instruction that is complex and difficult to answer directly. Make sure "
    "the new instruction is relevant but independent to the original "
    "instruction, which can be answered without knowing the original "
    "instruction, put the new instruction in the format of [New Instruction] "
    "your instruction [End]\n"
    "3. Answer the newly generated instruction as detailed as possible, in "
    "the format of [New Answer] your answer [End]";

constexpr std::string_view kResponseSystem =
    "You are a helpful, precise but picky assistant for checking the quality "
    "of the answer to a given instruction.";

constexpr std::string_view kResponseUser =
    "[Instruction]\n"
    "{instruction}\n"
    "[The Start of Answer]\n"
    "{answer}\n"
    "[The End of Answer]\n"
    "\n"
    "We would like you to answer several questions related to the quality of "
    "the answer to the given instruction.\n"
    "1. Why this answer is not good for the given instruction? Analyze based "
    "on the Helpfulness, Relevance, Accuracy, and Level of Details.\n"
    "2. Based on the reason you provided, generate a better answer, new and "
    "complete, as detailed as possible, in the format of [Better Answer] your "
    "answer [End]";

char fold(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

ParsedReflection reflect(ReflectionKind kind, const InstructionSample& sample,
                         const ReflectionPrompt& prompt,
                         const ChatProvider& teacher,
                         const TeacherSettings& settings) {
  if (prompt.kind != kind) {
    throw ConfigError(fmt::format("expected a {} reflection prompt, got {}",
                                  to_string(kind), to_string(prompt.kind)));
  }
  ChatRequest request;
  request.model_id = settings.model_id;
  request.system_prompt = prompt.system_prompt;
  request.user_prompt = prompt.render(sample.effective_instruction(), sample.response);
  request.temperature = settings.temperature;
  request.max_output_tokens = settings.max_output_tokens;

  ParsedReflection parsed;
  for (int attempt = 0; attempt <= std::max(settings.max_regenerations, 0);
       ++attempt) {
    request.regeneration = attempt;
    parsed = parse_reflection(kind, teacher.chat_complete(request));
    parsed.attempts = attempt + 1;
    if (parsed.ok()) break;
  }
  return parsed;
}

}  // namespace

std::string_view to_string(ReflectionKind kind) {
  return kind == ReflectionKind::kInstruction ? "instruction" : "response";
}

ReflectionPrompt ReflectionPrompt::default_for(ReflectionKind kind) {
  if (kind == ReflectionKind::kInstruction) {
    return {kind, std::string(kInstructionSystem), std::string(kInstructionUser)};
  }
  return {kind, std::string(kResponseSystem), std::string(kResponseUser)};
}

ReflectionPrompt ReflectionPrompt::make(ReflectionKind kind,
                                        std::string system_prompt,
                                        std::string user_template) {
  ReflectionPrompt prompt{kind, std::move(system_prompt), std::move(user_template)};
  prompt.validate();
  return prompt;
}

void ReflectionPrompt::validate() const {
  for (auto slot : {kInstructionSlot, kAnswerSlot}) {
    const std::size_t count = count_occurrences(user_template, slot);
    if (count != 1) {
      throw ConfigError(fmt::format(
          "{} reflection template must contain {} exactly once, found {}",
          to_string(kind), slot, count));
    }
  }
}

std::string ReflectionPrompt::render(std::string_view instruction,
                                     std::string_view answer) const {
  std::string out;
  std::string_view rest = user_template;
  while (!rest.empty()) {
    const std::size_t at_instruction = rest.find(kInstructionSlot);
    const std::size_t at_answer = rest.find(kAnswerSlot);
    const std::size_t next = std::min(at_instruction, at_answer);
    if (next == std::string_view::npos) {
      out.append(rest);
      break;
    }
    out.append(rest.substr(0, next));
    if (next == at_instruction) {
      out.append(instruction);
      rest.remove_prefix(next + kInstructionSlot.size());
    } else {
      out.append(answer);
      rest.remove_prefix(next + kAnswerSlot.size());
    }
  }
  return out;
}

ReflectionPrompts ReflectionPrompts::load(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory)) {
    throw ConfigError(fmt::format("prompt override directory {} does not exist",
                                  directory.string()));
  }
  ReflectionPrompts prompts;
  for (ReflectionPrompt* prompt : {&prompts.instruction, &prompts.response}) {
    const std::string stem(to_string(prompt->kind));
    const auto system_path = directory / (stem + ".system.txt");
    const auto user_path = directory / (stem + ".user.txt");
    if (std::filesystem::exists(system_path)) {
      prompt->system_prompt = read_text_file(system_path);
    }
    if (std::filesystem::exists(user_path)) {
      prompt->user_template = read_text_file(user_path);
    }
    prompt->validate();
  }
  return prompts;
}

std::size_t find_case_insensitive(std::string_view haystack,
                                  std::string_view needle, std::size_t from) {
  if (needle.empty() || from > haystack.size()) return std::string_view::npos;
  auto it = std::search(haystack.begin() + static_cast<std::ptrdiff_t>(from),
                        haystack.end(), needle.begin(), needle.end(),
                        [](char a, char b) { return fold(a) == fold(b); });
  if (it == haystack.end()) return std::string_view::npos;
  return static_cast<std::size_t>(it - haystack.begin());
}

std::optional<std::string> parse_markers(std::string_view raw,
                                         std::string_view open_marker,
                                         std::string_view close_marker) {
  const std::size_t open = find_case_insensitive(raw, open_marker);
  if (open == std::string_view::npos) return std::nullopt;
  const std::size_t body = open + open_marker.size();
  const std::size_t close = find_case_insensitive(raw, close_marker, body);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(trim(raw.substr(body, close - body)));
}

std::optional<MarkerBlock> extract_block(std::string_view raw,
                                         std::string_view open_marker,
                                         std::string_view close_marker,
                                         std::string_view stop_marker) {
  const std::size_t open = find_case_insensitive(raw, open_marker);
  if (open == std::string_view::npos) return std::nullopt;
  const std::size_t body = open + open_marker.size();
  MarkerBlock block;
  std::size_t end = find_case_insensitive(raw, close_marker, body);
  const std::size_t stop = stop_marker.empty()
                               ? std::string_view::npos
                               : find_case_insensitive(raw, stop_marker, body);
  std::size_t resume = end;
  if (end == std::string_view::npos || stop < end) {
    // The close marker is missing or belongs to the next block.
    block.terminated = false;
    end = stop == std::string_view::npos ? raw.size() : stop;
    resume = end;
  } else {
    resume = end + close_marker.size();
  }
  block.text = std::string(trim(raw.substr(body, end - body)));
  block.repeated =
      find_case_insensitive(raw, open_marker, resume) != std::string_view::npos;
  return block;
}

ParsedReflection parse_reflection(ReflectionKind kind, std::string raw) {
  ParsedReflection parsed;
  parsed.kind = kind;
  parsed.raw = std::move(raw);

  auto take = [&](std::string_view open, std::string_view stop,
                  std::optional<std::string>& slot) {
    auto block = extract_block(parsed.raw, open, kEndMarker, stop);
    if (!block) return;
    if (!block->terminated) {
      parsed.warnings.push_back(fmt::format("{} block is unterminated", open));
    }
    if (block->repeated) {
      parsed.warnings.push_back(
          fmt::format("multiple {} blocks; the first was used", open));
    }
    if (block->text.empty()) {
      parsed.warnings.push_back(fmt::format("{} block is empty", open));
      return;
    }
    slot = std::move(block->text);
  };

  if (kind == ReflectionKind::kInstruction) {
    take(kNewInstructionMarker, kNewAnswerMarker, parsed.new_instruction);
    take(kNewAnswerMarker, {}, parsed.new_answer);
  } else {
    take(kBetterAnswerMarker, {}, parsed.new_answer);
  }
  return parsed;
}

ParsedReflection reflect_instruction(const InstructionSample& sample,
                                     const ReflectionPrompt& prompt,
                                     const ChatProvider& teacher,
                                     const TeacherSettings& settings) {
  return reflect(ReflectionKind::kInstruction, sample, prompt, teacher, settings);
}

ParsedReflection reflect_response(const InstructionSample& sample,
                                  const ReflectionPrompt& prompt,
                                  const ChatProvider& teacher,
                                  const TeacherSettings& settings) {
  return reflect(ReflectionKind::kResponse, sample, prompt, teacher, settings);
}

nlohmann::json to_json_value(const TranscriptEntry& entry) {
  return nlohmann::json{{"id", entry.id},
                        {"phase", entry.phase},
                        {"raw", entry.raw},
                        {"parsed_ok", entry.parsed_ok},
                        {"attempts", entry.attempts}};
}

}  // namespace srecycle
