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

#include "srecycle/datamodel.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "srecycle/errors.hpp"
#include "srecycle/hashing.hpp"

namespace srecycle {

using nlohmann::json;

namespace {

constexpr std::string_view kOutcomeNames[] = {
    "BothModified",
    "ResponseOnlyModified",
    "InstructionOnlyModified_Discarded",
    "NoneModified_Discarded",
    "ReflectionFailed_Discarded",
};

json optional_to_json(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

std::optional<double> optional_double(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

json pair_to_json(const ScorePair& pair, const char* first, const char* second) {
  return json{{first, optional_to_json(pair.original)},
              {second, optional_to_json(pair.candidate)}};
}

ScorePair pair_from_json(const json& j, const char* first, const char* second) {
  return ScorePair{optional_double(j, first), optional_double(j, second)};
}

template <typename T>
json optional_value(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

template <typename T>
std::optional<T> read_optional(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

std::string required_string(const json& record, const char* field,
                            std::size_t index) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw ValidationError(
        fmt::format("record {}: missing required field \"{}\"", index, field));
  }
  if (!it->is_string()) {
    throw ValidationError(
        fmt::format("record {}: field \"{}\" is not a string", index, field));
  }
  return it->get<std::string>();
}

}  // namespace

InstructionSample InstructionSample::make(std::string instruction,
                                          std::string input,
                                          std::string response) {
  if (is_blank(instruction)) {
    throw ValidationError("instruction is empty");
  }
  if (is_blank(response)) {
    throw ValidationError("response is empty");
  }
  InstructionSample sample;
  sample.id = sample_id(instruction, input, response);
  sample.instruction = std::move(instruction);
  sample.input = std::move(input);
  sample.response = std::move(response);
  return sample;
}

std::string InstructionSample::effective_instruction() const {
  if (is_blank(input)) return instruction;
  return instruction + "\n\n" + input;
}

std::string sample_id(std::string_view instruction, std::string_view input,
                      std::string_view response) {
  // nlohmann::json objects keep keys sorted, which makes the dump canonical.
  json canonical = {
      {"input", normalize_newlines(input)},
      {"instruction", normalize_newlines(instruction)},
      {"output", normalize_newlines(response)},
  };
  return sha256_hex(dump_line(canonical));
}

std::string_view to_string(DatasetFormat format) {
  return format == DatasetFormat::kJsonl ? "jsonl" : "json_array";
}

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "jsonl") return DatasetFormat::kJsonl;
  if (name == "json_array" || name == "json") return DatasetFormat::kJsonArray;
  throw ConfigError(fmt::format("unknown dataset format \"{}\"", name));
}

IngestReport ingest_dataset(const std::filesystem::path& path,
                            std::optional<DatasetFormat> format,
                            std::string source_name) {
  const std::string text = read_text_file(path);
  if (!format) {
    if (path.extension() == ".jsonl") {
      format = DatasetFormat::kJsonl;
    } else {
      auto body = trim(text);
      format = (!body.empty() && body.front() == '[') ? DatasetFormat::kJsonArray
                                                      : DatasetFormat::kJsonl;
    }
  }

  std::vector<json> rows;
  if (*format == DatasetFormat::kJsonArray) {
    json parsed;
    try {
      parsed = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(
          fmt::format("{}: malformed JSON: {}", path.string(), e.what()));
    }
    if (!parsed.is_array()) {
      throw ValidationError(
          fmt::format("{}: expected a JSON array of records", path.string()));
    }
    rows.assign(parsed.begin(), parsed.end());
  } else {
    std::istringstream lines(text);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(lines, line)) {
      ++line_number;
      if (is_blank(line)) continue;
      try {
        rows.push_back(json::parse(line));
      } catch (const json::parse_error& e) {
        throw ValidationError(fmt::format("{}: record {} (line {}): {}",
                                          path.string(), rows.size(),
                                          line_number, e.what()));
      }
    }
  }

  IngestReport report;
  report.manifest.source_name =
      source_name.empty() ? path.stem().string() : std::move(source_name);
  std::unordered_set<std::string> seen;
  for (std::size_t index = 0; index < rows.size(); ++index) {
    const json& row = rows[index];
    if (!row.is_object()) {
      throw ValidationError(fmt::format("record {}: not a JSON object", index));
    }
    std::string instruction = required_string(row, "instruction", index);
    std::string output = required_string(row, "output", index);
    std::string input;
    if (auto it = row.find("input"); it != row.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw ValidationError(
            fmt::format("record {}: field \"input\" is not a string", index));
      }
      input = it->get<std::string>();
    }
    ++report.records_read;
    if (is_blank(instruction) || is_blank(output)) {
      ++report.dropped_empty;
      continue;
    }
    auto sample = InstructionSample::make(std::move(instruction),
                                          std::move(input), std::move(output));
    if (!seen.insert(sample.id).second) {
      ++report.dropped_duplicate;
      continue;
    }
    report.manifest.samples.push_back(std::move(sample));
  }
  return report;
}

void write_dataset(const DatasetManifest& manifest,
                   const std::filesystem::path& path, DatasetFormat format) {
  std::vector<json> rows;
  rows.reserve(manifest.samples.size());
  for (const auto& sample : manifest.samples) {
    rows.push_back(json{{"instruction", sample.instruction},
                        {"input", sample.input},
                        {"output", sample.response}});
  }
  if (format == DatasetFormat::kJsonl) {
    write_jsonl(path, rows);
  } else {
    write_text_file(path, json(rows).dump(2, ' ', false,
                                          json::error_handler_t::replace) +
                              "\n");
  }
}

std::string_view to_string(OutcomeTag tag) {
  return kOutcomeNames[static_cast<int>(tag)];
}

OutcomeTag parse_outcome(std::string_view name) {
  for (auto tag : kAllOutcomes) {
    if (to_string(tag) == name) return tag;
  }
  throw ValidationError(fmt::format("unknown outcome tag \"{}\"", name));
}

bool is_discarded(OutcomeTag tag) {
  return tag != OutcomeTag::kBothModified &&
         tag != OutcomeTag::kResponseOnlyModified;
}

OutcomeTag derive_outcome(bool instruction_accepted, bool response_accepted,
                          bool response_reflection_failed) {
  if (response_reflection_failed) return OutcomeTag::kReflectionFailedDiscarded;
  if (response_accepted) {
    return instruction_accepted ? OutcomeTag::kBothModified
                                : OutcomeTag::kResponseOnlyModified;
  }
  return instruction_accepted ? OutcomeTag::kInstructionOnlyModifiedDiscarded
                              : OutcomeTag::kNoneModifiedDiscarded;
}

std::optional<std::string> check_record(const ReflectionRecord& record) {
  const bool selected_original = record.phase1_selected == record.original;
  const bool selected_candidate = record.instruction_candidate &&
                                  record.phase1_selected ==
                                      *record.instruction_candidate;
  if (!selected_original && !selected_candidate) {
    return "phase1_selected is neither the original nor the candidate";
  }
  if (record.phase1_accepted != (selected_candidate && !selected_original)) {
    return "phase1_accepted disagrees with phase1_selected";
  }
  if (record.final_pair &&
      record.final_pair->instruction != record.phase1_selected.instruction) {
    return "final instruction differs from phase1_selected";
  }
  if (is_discarded(record.outcome) == record.final_pair.has_value()) {
    return fmt::format("outcome {} inconsistent with final presence",
                       to_string(record.outcome));
  }
  if (record.outcome != OutcomeTag::kReflectionFailedDiscarded &&
      record.outcome != derive_outcome(record.phase1_accepted,
                                       record.phase2_accepted, false)) {
    return "outcome inconsistent with acceptance flags";
  }
  return std::nullopt;
}

void to_json(json& j, const InstructionSample& sample) {
  j = json{{"id", sample.id},
           {"instruction", sample.instruction},
           {"input", sample.input},
           {"output", sample.response}};
}

void from_json(const json& j, InstructionSample& sample) {
  sample.instruction = j.at("instruction").get<std::string>();
  sample.input = j.value("input", std::string{});
  sample.response = j.at("output").get<std::string>();
  sample.id = j.contains("id")
                  ? j.at("id").get<std::string>()
                  : sample_id(sample.instruction, sample.input, sample.response);
}

void to_json(json& j, const ReflectionRecord& record) {
  j = json{
      {"id", record.original.id},
      {"original", record.original},
      {"instruction_candidate", optional_value(record.instruction_candidate)},
      {"phase1_selected", record.phase1_selected},
      {"response_candidate", optional_value(record.response_candidate)},
      {"final", optional_value(record.final_pair)},
      {"raw_phase1_output", optional_value(record.raw_phase1_output)},
      {"raw_phase2_output", optional_value(record.raw_phase2_output)},
      {"phase1_scores", pair_to_json(record.phase1_scores, "original", "candidate")},
      {"phase2_scores", pair_to_json(record.phase2_scores, "kept", "reflected")},
      {"strategy", record.strategy},
      {"phase1_metric", pair_to_json(record.phase1_metric, "original", "candidate")},
      {"phase2_metric", pair_to_json(record.phase2_metric, "kept", "reflected")},
      {"phase1_accepted", record.phase1_accepted},
      {"phase2_accepted", record.phase2_accepted},
      {"outcome", to_string(record.outcome)},
      {"warnings", record.warnings},
  };
}

void from_json(const json& j, ReflectionRecord& record) {
  record.original = j.at("original").get<InstructionSample>();
  record.instruction_candidate =
      read_optional<InstructionSample>(j, "instruction_candidate");
  record.phase1_selected = j.at("phase1_selected").get<InstructionSample>();
  record.response_candidate = read_optional<std::string>(j, "response_candidate");
  record.final_pair = read_optional<InstructionSample>(j, "final");
  record.raw_phase1_output = read_optional<std::string>(j, "raw_phase1_output");
  record.raw_phase2_output = read_optional<std::string>(j, "raw_phase2_output");
  record.phase1_scores = pair_from_json(j.at("phase1_scores"), "original", "candidate");
  record.phase2_scores = pair_from_json(j.at("phase2_scores"), "kept", "reflected");
  record.strategy = j.value("strategy", std::string{});
  if (j.contains("phase1_metric")) {
    record.phase1_metric = pair_from_json(j.at("phase1_metric"), "original", "candidate");
  }
  if (j.contains("phase2_metric")) {
    record.phase2_metric = pair_from_json(j.at("phase2_metric"), "kept", "reflected");
  }
  record.phase1_accepted = j.at("phase1_accepted").get<bool>();
  record.phase2_accepted = j.at("phase2_accepted").get<bool>();
  record.outcome = parse_outcome(j.at("outcome").get<std::string>());
  record.warnings = j.value("warnings", std::vector<std::string>{});
}

json curated_row(const ReflectionRecord& record) {
  const InstructionSample& final_pair = record.final_pair.value();
  return json{
      {"instruction", final_pair.instruction},
      {"input", final_pair.input},
      {"output", final_pair.response},
      {"provenance",
       {{"id", final_pair.id},
        {"source_id", record.original.id},
        {"outcome", to_string(record.outcome)},
        {"strategy", record.strategy},
        {"ifd", pair_to_json(record.phase1_scores, "original", "candidate")},
        {"rifd", pair_to_json(record.phase2_scores, "kept", "reflected")}}},
  };
}

void write_records(std::span<const ReflectionRecord> records,
                   const std::filesystem::path& path) {
  std::vector<json> rows(records.begin(), records.end());
  write_jsonl(path, rows);
}

std::vector<ReflectionRecord> read_records(const std::filesystem::path& path) {
  std::vector<ReflectionRecord> records;
  for (const auto& row : read_jsonl(path)) {
    records.push_back(row.get<ReflectionRecord>());
  }
  return records;
}

void write_curated(std::span<const ReflectionRecord> records,
                   const std::filesystem::path& path) {
  std::vector<json> rows;
  for (const auto& record : records) {
    if (record.final_pair) rows.push_back(curated_row(record));
  }
  write_jsonl(path, rows);
}

std::string dump_line(const json& value) {
  return value.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_jsonl(const std::filesystem::path& path,
                 std::span<const json> rows) {
  std::string text;
  for (const auto& row : rows) {
    text += dump_line(row);
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream lines(read_text_file(path));
  std::vector<json> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(lines, line)) {
    ++line_number;
    if (is_blank(line)) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(),
                                        line_number, e.what()));
    }
  }
  return rows;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  // Temp-then-rename so readers never observe a half-written file.
  thread_local std::mt19937_64 rng{std::random_device{}()};
  auto tmp = path;
  tmp += fmt::format(".tmp.{:016x}", rng());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
      throw Error(ExitCode::kFailure,
                  fmt::format("cannot write {}", path.string()));
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError(fmt::format("cannot open {}", path.string()));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace srecycle
