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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "srecycle/datamodel.hpp"
#include "srecycle/providers.hpp"
#include "srecycle/scoring.hpp"

namespace srecycle {

// Dataset-level means. Perplexity columns average per-sample perplexities.
struct DatasetStats {
  double mean_instruction_tokens = 0.0;
  double mean_response_tokens = 0.0;
  double mean_instruction_ppl = 0.0;      // ppl(x)
  double mean_response_ppl_uncond = 0.0;  // ppl(y)
  double mean_response_ppl_cond = 0.0;    // ppl(y|x)
  std::optional<double> mean_coherence;
  double mean_ifd = 0.0;
  double mean_rifd = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_excluded_truncated = 0;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

inline constexpr std::string_view kPplAggregation = "mean_of_per_sample_perplexity";

struct StatsOptions {
  bool include_truncated = false;
  const EmbeddingProvider* embeddings = nullptr;  // enables coherence
  std::string embedding_model_id;
};

// Throws ValidationError when a sample has no score row or when every
// sample is excluded ("no includable samples").
DatasetStats dataset_statistics(std::span<const InstructionSample> samples,
                                std::span<const ScoredSample> scores,
                                const StatsOptions& options = {});

nlohmann::json to_json_value(const DatasetStats& stats);

struct OutcomeShare {
  OutcomeTag tag;
  std::size_t count = 0;
  double fraction = 0.0;
};

// One entry per OutcomeTag, or empty for an empty input.
std::vector<OutcomeShare> component_distribution(
    std::span<const ReflectionRecord> records);

nlohmann::json to_json_value(std::span<const OutcomeShare> shares);

// Pairwise judge prompt; slots {question}, {answer_1}, {answer_2}.
struct JudgePrompt {
  std::string system_prompt;
  std::string user_template;

  static JudgePrompt defaults();
  std::string render(std::string_view question, std::string_view answer_1,
                     std::string_view answer_2) const;
};

using ScorePairAB = std::pair<double, double>;

// First line of a judgment: exactly two numbers in [1, 10].
std::optional<ScorePairAB> parse_score_line(std::string_view judgment);

enum class JudgeOutcome { kWin, kTie, kLose };

std::string_view to_string(JudgeOutcome outcome);

// Both pairs are (score of a, score of b). Each order counts +1 when a is
// strictly ahead, -1 when behind; the sign of the total decides.
JudgeOutcome adjudicate_outcome(ScorePairAB order1, ScorePairAB order2);

struct JudgeSettings {
  std::string model_id;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  int max_reasks = 1;
  JudgePrompt prompt = JudgePrompt::defaults();
};

struct JudgeVerdict {
  std::string instruction_id;
  std::optional<ScorePairAB> order1;  // a shown first
  std::optional<ScorePairAB> order2;  // b shown first, remapped to (a, b)
  std::optional<JudgeOutcome> outcome;  // absent when invalid
  std::array<std::string, 2> raw_judgments;

  bool valid() const { return outcome.has_value(); }
};

JudgeVerdict judge_pair(std::string instruction_id, std::string_view instruction,
                        std::string_view response_a, std::string_view response_b,
                        const ChatProvider& judge, const JudgeSettings& settings);

nlohmann::json to_json_value(const JudgeVerdict& verdict);

struct JudgeItem {
  std::string instruction_id;
  std::string instruction;
  std::string response_a;
  std::string response_b;
};

std::vector<JudgeVerdict> judge_all(std::span<const JudgeItem> items,
                                    const ChatProvider& judge,
                                    const JudgeSettings& settings, int parallelism);

// (wins - losses) / (wins + ties + losses) + 1. Throws ValidationError when
// the total is zero.
double win_rate(std::size_t wins, std::size_t ties, std::size_t losses);

struct WinRateSummary {
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
  std::size_t invalid = 0;
  std::optional<double> win_rate;  // absent when every verdict is invalid
};

WinRateSummary summarize(std::span<const JudgeVerdict> verdicts);

nlohmann::json to_json_value(const WinRateSummary& summary);

}  // namespace srecycle
