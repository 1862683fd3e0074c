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

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace srecycle {

inline constexpr int kSchemaVersion = 1;

// One single-turn instruction-tuning record. `input` is the optional Alpaca
// auxiliary field; empty means absent.
struct InstructionSample {
  std::string id;
  std::string instruction;
  std::string input;
  std::string response;

  // Validates the non-blank invariants and assigns the content id.
  // Throws ValidationError.
  static InstructionSample make(std::string instruction, std::string input,
                                std::string response);

  // The text the student and teacher see as "the instruction":
  // instruction, or instruction + "\n\n" + input when input is present.
  std::string effective_instruction() const;

  friend bool operator==(const InstructionSample&,
                         const InstructionSample&) = default;
};

// Hex digest of the canonical (sorted-key, newline-normalized) record.
std::string sample_id(std::string_view instruction, std::string_view input,
                      std::string_view response);

struct DatasetManifest {
  std::vector<InstructionSample> samples;
  std::string source_name;
  int schema_version = kSchemaVersion;

  friend bool operator==(const DatasetManifest&,
                         const DatasetManifest&) = default;
};

enum class DatasetFormat { kJsonArray, kJsonl };

std::string_view to_string(DatasetFormat format);
DatasetFormat parse_dataset_format(std::string_view name);

struct IngestReport {
  DatasetManifest manifest;
  std::size_t records_read = 0;
  std::size_t dropped_empty = 0;
  std::size_t dropped_duplicate = 0;
};

// Reads Alpaca-schema records ("instruction", optional "input", "output").
// When `format` is empty it is inferred from the extension, then from the
// first non-space byte. Throws ValidationError with the record index on
// parse or schema failures.
IngestReport ingest_dataset(const std::filesystem::path& path,
                            std::optional<DatasetFormat> format = std::nullopt,
                            std::string source_name = {});

void write_dataset(const DatasetManifest& manifest,
                   const std::filesystem::path& path,
                   DatasetFormat format = DatasetFormat::kJsonl);

enum class OutcomeTag {
  kBothModified,
  kResponseOnlyModified,
  kInstructionOnlyModifiedDiscarded,
  kNoneModifiedDiscarded,
  kReflectionFailedDiscarded,
};

inline constexpr std::array kAllOutcomes = {
    OutcomeTag::kBothModified,
    OutcomeTag::kResponseOnlyModified,
    OutcomeTag::kInstructionOnlyModifiedDiscarded,
    OutcomeTag::kNoneModifiedDiscarded,
    OutcomeTag::kReflectionFailedDiscarded,
};

std::string_view to_string(OutcomeTag tag);
OutcomeTag parse_outcome(std::string_view name);
bool is_discarded(OutcomeTag tag);
OutcomeTag derive_outcome(bool instruction_accepted, bool response_accepted,
                          bool response_reflection_failed);

// Mean negative log-likelihoods (nats per target token) of one target text,
// with and without its conditioning context.
struct LossBreakdown {
  double loss_conditional = 0.0;
  double loss_unconditional = 0.0;
  int target_token_count = 0;
  bool truncated = false;

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

// Scores of the two competitors in one selection phase.
struct ScorePair {
  std::optional<double> original;
  std::optional<double> candidate;

  friend bool operator==(const ScorePair&, const ScorePair&) = default;
};

// Lineage of one source sample through both reflection phases.
struct ReflectionRecord {
  InstructionSample original;
  std::optional<InstructionSample> instruction_candidate;
  InstructionSample phase1_selected;
  std::optional<std::string> response_candidate;
  std::optional<InstructionSample> final_pair;  // absent when discarded
  std::optional<std::string> raw_phase1_output;
  std::optional<std::string> raw_phase2_output;
  ScorePair phase1_scores;  // IFD of (x0,y0) and (x_ins,y_ins)
  ScorePair phase2_scores;  // r-IFD of (x1,y1) and (x1,y_res)
  std::string strategy;
  ScorePair phase1_metric;  // the metric the strategy compared
  ScorePair phase2_metric;
  bool phase1_accepted = false;
  bool phase2_accepted = false;
  OutcomeTag outcome = OutcomeTag::kReflectionFailedDiscarded;
  std::vector<std::string> warnings;

  friend bool operator==(const ReflectionRecord&,
                         const ReflectionRecord&) = default;
};

// Checks the record invariants; returns a description of the first
// violation, or nullopt.
std::optional<std::string> check_record(const ReflectionRecord& record);

void to_json(nlohmann::json& j, const InstructionSample& sample);
void from_json(const nlohmann::json& j, InstructionSample& sample);
void to_json(nlohmann::json& j, const ReflectionRecord& record);
void from_json(const nlohmann::json& j, ReflectionRecord& record);

// Curated output row: Alpaca fields of the final pair plus "provenance".
nlohmann::json curated_row(const ReflectionRecord& record);

void write_records(std::span<const ReflectionRecord> records,
                   const std::filesystem::path& path);
std::vector<ReflectionRecord> read_records(const std::filesystem::path& path);

// Writes only records that carry a final pair, in the given order.
void write_curated(std::span<const ReflectionRecord> records,
                   const std::filesystem::path& path);

// Line-oriented helpers shared by every JSONL writer.
std::string dump_line(const nlohmann::json& value);
void write_jsonl(const std::filesystem::path& path,
                 std::span<const nlohmann::json> rows);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace srecycle
