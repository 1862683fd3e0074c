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

#include <atomic>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "srecycle/datamodel.hpp"
#include "srecycle/providers.hpp"

namespace srecycle {

inline constexpr std::string_view kTemplateSlot = "{}";

// Single-turn Vicuna v1.1 framing.
inline constexpr std::string_view kVicunaWrapper =
    "A chat between a curious user and an artificial intelligence assistant. "
    "The assistant gives helpful, detailed, and polite answers to the user's "
    "questions. USER: {} ASSISTANT:";

inline constexpr std::string_view kAlpacaWrapper =
    "Below is an instruction that describes a task. Write a response that "
    "appropriately completes the request.\n\n### Instruction:\n{}\n\n"
    "### Response:";

// Turns a response into a query asking for its instruction.
inline constexpr std::string_view kReverseQueryWrapper =
    "Below is a response. Guess the instruction.\n\nResponse:\n{}\n\n"
    "Instruction:";

// Context wrappers used by the student model. Each template holds exactly
// one "{}" slot; construction through make() enforces it.
struct PromptTemplates {
  std::string conditional_wrapper{kVicunaWrapper};
  std::string reverse_query_wrapper{kReverseQueryWrapper};

  // Throws ConfigError unless each template has exactly one slot.
  static PromptTemplates make(std::string conditional_wrapper,
                              std::string reverse_query_wrapper);
  void validate() const;

  friend bool operator==(const PromptTemplates&,
                         const PromptTemplates&) = default;
};

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

// Replaces the first "{}" in `tmpl` with `value`.
std::string fill_slot(std::string_view tmpl, std::string_view value);

// The student model behind a scoring run.
struct Scorer {
  const LogprobProvider& provider;
  std::string model_id;
  int max_total_tokens = kDefaultTotalTokens;
};

// Mean negative log-likelihood of the retained target tokens.
double mean_nll(const LogprobResponse& response);

inline double perplexity(double mean_loss) { return std::exp(mean_loss); }

// L(y|x): context is the conditional wrapper filled with the instruction.
double conditional_loss(const InstructionSample& sample,
                        const PromptTemplates& templates, const Scorer& scorer);

// L(target) with an empty context.
double unconditional_loss(std::string_view target, const Scorer& scorer);

std::string build_reverse_query(std::string_view response,
                                const PromptTemplates& templates);

// Forward term: response given the wrapped instruction vs. bare response.
LossBreakdown forward_losses(const InstructionSample& sample,
                             const PromptTemplates& templates,
                             const Scorer& scorer);

// Reverse term: instruction given the reverse query vs. bare instruction.
LossBreakdown reverse_losses(const InstructionSample& sample,
                             const PromptTemplates& templates,
                             const Scorer& scorer);

// exp(conditional - unconditional); the perplexity ratio of the breakdown.
double difficulty_ratio(const LossBreakdown& losses);

double ifd_score(const InstructionSample& sample,
                 const PromptTemplates& templates, const Scorer& scorer);
double rifd_score(const InstructionSample& sample,
                  const PromptTemplates& templates, const Scorer& scorer);

struct ScoreReport {
  double ifd = 0.0;
  double rifd = 0.0;
  LossBreakdown forward;  // target = response
  LossBreakdown reverse;  // target = effective instruction
  std::string model_id;

  bool truncated() const { return forward.truncated || reverse.truncated; }

  friend bool operator==(const ScoreReport&, const ScoreReport&) = default;
};

ScoreReport score_sample(const InstructionSample& sample,
                         const PromptTemplates& templates, const Scorer& scorer);

struct ScoreFailure {
  std::string id;
  std::string reason;
  bool fatal = false;  // provider failure, as opposed to an unscorable sample

  friend bool operator==(const ScoreFailure&, const ScoreFailure&) = default;
};

using ScoredSample = std::pair<std::string, ScoreReport>;

struct BatchScores {
  std::vector<ScoredSample> reports;  // manifest order
  std::vector<ScoreFailure> failures;  // manifest order
  bool interrupted = false;
};

// Scores every sample with up to `parallelism` concurrent workers. Per-sample
// failures are collected; CacheCorruptionError aborts the batch. Setting
// `stop` ends the batch early with `interrupted` set.
BatchScores score_batch(const DatasetManifest& manifest,
                        const PromptTemplates& templates, const Scorer& scorer,
                        int parallelism, const std::atomic<bool>* stop = nullptr);

// Score dump rows: {id, ifd, rifd, loss_cond_fwd, loss_uncond_fwd,
// loss_cond_rev, loss_uncond_rev, n_fwd, n_rev, truncated, model_id}.
nlohmann::json score_row(const ScoredSample& scored);
ScoredSample parse_score_row(const nlohmann::json& row);
void write_score_dump(std::span<const ScoredSample> rows,
                      const std::filesystem::path& path);
std::vector<ScoredSample> read_score_dump(const std::filesystem::path& path);

}  // namespace srecycle
