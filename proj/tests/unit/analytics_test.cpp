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

#include <cmath>

#include <gtest/gtest.h>

#include "srecycle/analytics.hpp"
#include "srecycle/errors.hpp"
#include "srecycle/mock_providers.hpp"
#include "test_support.hpp"

namespace srecycle {
namespace {

ScoreReport report(double cond_fwd, double uncond_fwd, int n_fwd, double cond_rev,
                   double uncond_rev, int n_rev, bool truncated = false) {
  ScoreReport r;
  r.forward = {cond_fwd, uncond_fwd, n_fwd, truncated};
  r.reverse = {cond_rev, uncond_rev, n_rev, false};
  r.ifd = difficulty_ratio(r.forward);
  r.rifd = difficulty_ratio(r.reverse);
  r.model_id = "student";
  return r;
}

TEST(Stats, MeansOfPerSampleValues) {
  std::vector<InstructionSample> samples{InstructionSample::make("q1", "", "a1"),
                                         InstructionSample::make("q2", "", "a2")};
  std::vector<ScoredSample> scores{
      {samples[0].id, report(1.0, 2.0, 10, 0.5, 1.0, 4)},
      {samples[1].id, report(2.0, 2.0, 20, 1.0, 3.0, 6)}};
  auto stats = dataset_statistics(samples, scores);
  EXPECT_EQ(stats.n_samples, 2u);
  EXPECT_DOUBLE_EQ(stats.mean_response_tokens, 15.0);
  EXPECT_DOUBLE_EQ(stats.mean_instruction_tokens, 5.0);
  EXPECT_NEAR(stats.mean_response_ppl_cond, (std::exp(1.0) + std::exp(2.0)) / 2, 1e-12);
  EXPECT_NEAR(stats.mean_response_ppl_uncond, std::exp(2.0), 1e-12);
  EXPECT_NEAR(stats.mean_instruction_ppl, (std::exp(1.0) + std::exp(3.0)) / 2, 1e-12);
  EXPECT_NEAR(stats.mean_ifd, (std::exp(-1.0) + 1.0) / 2, 1e-12);
  EXPECT_NEAR(stats.mean_rifd, (std::exp(-0.5) + std::exp(-2.0)) / 2, 1e-12);
  EXPECT_FALSE(stats.mean_coherence.has_value());
  EXPECT_EQ(to_json_value(stats)["ppl_aggregation"], kPplAggregation);
}

TEST(Stats, TruncatedSamplesExcludedByDefault) {
  std::vector<InstructionSample> samples{InstructionSample::make("q1", "", "a1"),
                                         InstructionSample::make("q2", "", "a2")};
  std::vector<ScoredSample> scores{
      {samples[0].id, report(1.0, 2.0, 10, 0.5, 1.0, 4, true)},
      {samples[1].id, report(2.0, 2.0, 20, 1.0, 3.0, 6)}};
  auto stats = dataset_statistics(samples, scores);
  EXPECT_EQ(stats.n_samples, 1u);
  EXPECT_EQ(stats.n_excluded_truncated, 1u);
  EXPECT_DOUBLE_EQ(stats.mean_response_tokens, 20.0);
  StatsOptions all;
  all.include_truncated = true;
  EXPECT_EQ(dataset_statistics(samples, scores, all).n_samples, 2u);
}

TEST(Stats, MissingScoresAndEmptyInputFail) {
  std::vector<InstructionSample> samples{InstructionSample::make("q1", "", "a1")};
  EXPECT_THROW(dataset_statistics(samples, {}), ValidationError);
  EXPECT_THROW(dataset_statistics({}, {}), ValidationError);
}

TEST(Stats, CoherenceWhenEmbeddingsGiven) {
  HashingEmbeddingModel embeddings(16);
  std::vector<InstructionSample> samples{
      InstructionSample::make("same words", "", "same words")};
  std::vector<ScoredSample> scores{{samples[0].id, report(1, 1, 2, 1, 1, 2)}};
  StatsOptions options;
  options.embeddings = &embeddings;
  auto stats = dataset_statistics(samples, scores, options);
  ASSERT_TRUE(stats.mean_coherence.has_value());
  EXPECT_NEAR(*stats.mean_coherence, 1.0, 1e-12);
}

TEST(Distribution, FractionsSumToOne) {
  std::vector<ReflectionRecord> records(7);
  const OutcomeTag tags[7] = {
      OutcomeTag::kBothModified, OutcomeTag::kBothModified,
      OutcomeTag::kResponseOnlyModified, OutcomeTag::kNoneModifiedDiscarded,
      OutcomeTag::kNoneModifiedDiscarded, OutcomeTag::kNoneModifiedDiscarded,
      OutcomeTag::kReflectionFailedDiscarded};
  for (int i = 0; i < 7; ++i) records[i].outcome = tags[i];
  auto shares = component_distribution(records);
  ASSERT_EQ(shares.size(), 5u);
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& s : shares) {
    total += s.fraction;
    count += s.count;
  }
  EXPECT_EQ(count, 7u);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(shares[0].tag, OutcomeTag::kBothModified);
  EXPECT_DOUBLE_EQ(shares[0].fraction, 2.0 / 7.0);
  EXPECT_TRUE(component_distribution({}).empty());
}

TEST(Judge, ScoreLineParsing) {
  EXPECT_EQ(parse_score_line("8 6\nBecause..."), (ScorePairAB{8, 6}));
  EXPECT_EQ(parse_score_line("  7.5   9 "), (ScorePairAB{7.5, 9}));
  EXPECT_EQ(parse_score_line("8, 6"), std::nullopt);
  EXPECT_EQ(parse_score_line("8 6 4"), std::nullopt);
  EXPECT_EQ(parse_score_line("0 6"), std::nullopt);
  EXPECT_EQ(parse_score_line("11 6"), std::nullopt);
  EXPECT_EQ(parse_score_line("Assistant 1: 8"), std::nullopt);
  EXPECT_EQ(parse_score_line(""), std::nullopt);
}

TEST(Judge, AdjudicationExamples) {
  // Second order shows b first; the pairs here are already remapped to (a, b).
  EXPECT_EQ(adjudicate_outcome({8, 6}, {7, 5}), JudgeOutcome::kWin);
  EXPECT_EQ(adjudicate_outcome({7, 7}, {6, 6}), JudgeOutcome::kTie);
  EXPECT_EQ(adjudicate_outcome({8, 6}, {6, 8}), JudgeOutcome::kTie);
  EXPECT_EQ(adjudicate_outcome({8, 6}, {6, 6}), JudgeOutcome::kWin);
  EXPECT_EQ(adjudicate_outcome({5, 6}, {6, 6}), JudgeOutcome::kLose);
}

TEST(Judge, PromptShowsBothOrders) {
  ScriptedChatModel scripted({{{"Assistant 1's Answer]\nA\n"}, {"8 6"}},
                              {{"Assistant 1's Answer]\nB\n"}, {"5 7"}}});
  testing::RecordingChat chat(scripted);
  JudgeSettings settings;
  settings.model_id = "judge";
  auto verdict = judge_pair("id", "Question?", "A", "B", chat, settings);
  ASSERT_TRUE(verdict.valid());
  EXPECT_EQ(*verdict.order1, (ScorePairAB{8, 6}));
  EXPECT_EQ(*verdict.order2, (ScorePairAB{7, 5}));
  EXPECT_EQ(*verdict.outcome, JudgeOutcome::kWin);
  const auto requests = chat.requests();
  ASSERT_EQ(requests.size(), 2u);
  EXPECT_EQ(requests[0].temperature, 0.0);
  EXPECT_NE(requests[0].user_prompt.find("Question?"), std::string::npos);
}

TEST(Judge, SameScoresBothOrdersIsATie) {
  auto chat = ScriptedChatModel::always("7 5");
  auto verdict = judge_pair("id", "Q", "A", "B", chat, JudgeSettings{});
  EXPECT_EQ(*verdict.outcome, JudgeOutcome::kTie);
}

TEST(Judge, ReasksThenGivesUp) {
  ScriptedChatModel chat({{{}, {"no scores", "9 2"}}});
  JudgeSettings settings;
  auto verdict = judge_pair("id", "Q", "A", "B", chat, settings);
  EXPECT_TRUE(verdict.valid());
  settings.max_reasks = 0;
  auto invalid = judge_pair("id", "Q", "A", "B", chat, settings);
  EXPECT_FALSE(invalid.valid());
  EXPECT_EQ(to_json_value(invalid)["valid"], false);
}

TEST(WinRate, Formula) {
  EXPECT_DOUBLE_EQ(win_rate(10, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(win_rate(0, 10, 0), 1.0);
  EXPECT_DOUBLE_EQ(win_rate(0, 0, 10), 0.0);
  EXPECT_DOUBLE_EQ(win_rate(3, 1, 1), 1.4);
  EXPECT_THROW(win_rate(0, 0, 0), ValidationError);
}

TEST(WinRate, SummaryCountsInvalidSeparately) {
  std::vector<JudgeVerdict> verdicts(4);
  verdicts[0].outcome = JudgeOutcome::kWin;
  verdicts[1].outcome = JudgeOutcome::kTie;
  verdicts[2].outcome = JudgeOutcome::kLose;
  auto summary = summarize(verdicts);
  EXPECT_EQ(summary.invalid, 1u);
  EXPECT_DOUBLE_EQ(*summary.win_rate, 1.0);
  EXPECT_FALSE(summarize(std::vector<JudgeVerdict>(2)).win_rate.has_value());
}

}  // namespace
}  // namespace srecycle
