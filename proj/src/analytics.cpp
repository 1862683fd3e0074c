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

#include "srecycle/analytics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "srecycle/errors.hpp"
#include "srecycle/hashing.hpp"
#include "srecycle/worker_pool.hpp"

namespace srecycle {

using nlohmann::json;

namespace {

constexpr std::string_view kJudgeSystem =
    "You are a helpful and precise assistant for checking the quality of the "
    "answer.";

constexpr std::string_view kJudgeUser =
    "[Question]\n"
    "{question}\n"
    "[The Start of Assistant 1's Answer]\n"
    "{answer_1}\n"
    "[The End of Assistant 1's Answer]\n"
    "[The Start of Assistant 2's Answer]\n"
    "{answer_2}\n"
    "[The End of Assistant 2's Answer]\n"
    "\n"
    "We would like to request your feedback on the performance of two AI "
    "assistants in response to the user question displayed above.\n"
    "Please rate the helpfulness, relevance, accuracy, level of details of "
    "their responses. Each assistant receives an overall score on a scale of "
    "1 to 10, where a higher score indicates better overall performance.\n"
    "Please first output a single line containing only two values indicating "
    "the scores for Assistant 1 and 2, respectively. The two scores are "
    "separated by a space. In the subsequent line, please provide a "
    "comprehensive explanation of your evaluation, avoiding any potential bias "
    "and ensuring that the order in which the responses were presented does "
    "not affect your judgment.";

// Order-independent mean: the values are summed in sorted order.
double stable_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::optional<double> parse_number(std::string_view token) {
  double value = 0.0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value,
                                   std::chars_format::fixed);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

int sign_of(ScorePairAB scores) {
  if (scores.first > scores.second) return 1;
  if (scores.first < scores.second) return -1;
  return 0;
}

json optional_number(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

json optional_scores(const std::optional<ScorePairAB>& scores) {
  if (!scores) return nullptr;
  return json::array({scores->first, scores->second});
}

}  // namespace

DatasetStats dataset_statistics(std::span<const InstructionSample> samples,
                                std::span<const ScoredSample> scores,
                                const StatsOptions& options) {
  std::unordered_map<std::string, const ScoreReport*> by_id;
  for (const auto& [id, report] : scores) by_id.emplace(id, &report);

  DatasetStats stats;
  std::vector<double> ins_len, res_len, ins_ppl, res_ppl_u, res_ppl_c, coherence,
      ifd, rifd;
  for (const auto& sample : samples) {
    auto it = by_id.find(sample.id);
    if (it == by_id.end()) {
      throw ValidationError(fmt::format("missing scores for sample {}", sample.id));
    }
    const ScoreReport& r = *it->second;
    if (r.truncated() && !options.include_truncated) {
      ++stats.n_excluded_truncated;
      continue;
    }
    ins_len.push_back(r.reverse.target_token_count);
    res_len.push_back(r.forward.target_token_count);
    ins_ppl.push_back(perplexity(r.reverse.loss_unconditional));
    res_ppl_u.push_back(perplexity(r.forward.loss_unconditional));
    res_ppl_c.push_back(perplexity(r.forward.loss_conditional));
    ifd.push_back(r.ifd);
    rifd.push_back(r.rifd);
    if (options.embeddings) {
      const auto& model = options.embedding_model_id;
      coherence.push_back(cosine_similarity(
          options.embeddings->embed({model, sample.effective_instruction()}),
          options.embeddings->embed({model, sample.response})));
    }
  }
  if (ifd.empty()) throw ValidationError("no includable samples");

  stats.n_samples = ifd.size();
  stats.mean_instruction_tokens = stable_mean(std::move(ins_len));
  stats.mean_response_tokens = stable_mean(std::move(res_len));
  stats.mean_instruction_ppl = stable_mean(std::move(ins_ppl));
  stats.mean_response_ppl_uncond = stable_mean(std::move(res_ppl_u));
  stats.mean_response_ppl_cond = stable_mean(std::move(res_ppl_c));
  if (!coherence.empty()) stats.mean_coherence = stable_mean(std::move(coherence));
  stats.mean_ifd = stable_mean(std::move(ifd));
  stats.mean_rifd = stable_mean(std::move(rifd));
  return stats;
}

json to_json_value(const DatasetStats& stats) {
  return json{{"n_samples", stats.n_samples},
              {"n_excluded_truncated", stats.n_excluded_truncated},
              {"mean_instruction_tokens", stats.mean_instruction_tokens},
              {"mean_response_tokens", stats.mean_response_tokens},
              {"mean_instruction_ppl", stats.mean_instruction_ppl},
              {"mean_response_ppl_uncond", stats.mean_response_ppl_uncond},
              {"mean_response_ppl_cond", stats.mean_response_ppl_cond},
              {"mean_coherence", optional_number(stats.mean_coherence)},
              {"mean_ifd", stats.mean_ifd},
              {"mean_rifd", stats.mean_rifd},
              {"ppl_aggregation", kPplAggregation}};
}

std::vector<OutcomeShare> component_distribution(
    std::span<const ReflectionRecord> records) {
  std::vector<OutcomeShare> shares;
  if (records.empty()) return shares;
  for (OutcomeTag tag : kAllOutcomes) shares.push_back({tag, 0, 0.0});
  for (const auto& record : records) {
    ++shares[static_cast<std::size_t>(record.outcome)].count;
  }
  const double total = static_cast<double>(records.size());
  for (auto& share : shares) share.fraction = static_cast<double>(share.count) / total;
  return shares;
}

json to_json_value(std::span<const OutcomeShare> shares) {
  json out = json::object();
  for (const auto& share : shares) {
    out[std::string(to_string(share.tag))] =
        json{{"count", share.count}, {"fraction", share.fraction}};
  }
  return out;
}

JudgePrompt JudgePrompt::defaults() {
  return {std::string(kJudgeSystem), std::string(kJudgeUser)};
}

std::string JudgePrompt::render(std::string_view question,
                                std::string_view answer_1,
                                std::string_view answer_2) const {
  const std::array<std::pair<std::string_view, std::string_view>, 3> slots{{
      {"{question}", question},
      {"{answer_1}", answer_1},
      {"{answer_2}", answer_2},
  }};
  std::string out;
  std::string_view rest = user_template;
  for (;;) {
    std::size_t best = std::string_view::npos;
    const std::pair<std::string_view, std::string_view>* hit = nullptr;
    for (const auto& slot : slots) {
      const std::size_t at = rest.find(slot.first);
      if (at < best) {
        best = at;
        hit = &slot;
      }
    }
    if (!hit) {
      out.append(rest);
      return out;
    }
    out.append(rest.substr(0, best));
    out.append(hit->second);
    rest.remove_prefix(best + hit->first.size());
  }
}

std::optional<ScorePairAB> parse_score_line(std::string_view judgment) {
  const std::string_view line = trim(judgment.substr(0, judgment.find('\n')));
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    if (end > pos) tokens.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  if (tokens.size() != 2) return std::nullopt;
  const auto a = parse_number(tokens[0]);
  const auto b = parse_number(tokens[1]);
  if (!a || !b) return std::nullopt;
  for (double v : {*a, *b}) {
    if (v < 1.0 || v > 10.0) return std::nullopt;
  }
  return ScorePairAB{*a, *b};
}

std::string_view to_string(JudgeOutcome outcome) {
  switch (outcome) {
    case JudgeOutcome::kWin: return "win";
    case JudgeOutcome::kTie: return "tie";
    case JudgeOutcome::kLose: return "lose";
  }
  return "tie";
}

JudgeOutcome adjudicate_outcome(ScorePairAB order1, ScorePairAB order2) {
  const int total = sign_of(order1) + sign_of(order2);
  if (total > 0) return JudgeOutcome::kWin;
  if (total < 0) return JudgeOutcome::kLose;
  return JudgeOutcome::kTie;
}

JudgeVerdict judge_pair(std::string instruction_id, std::string_view instruction,
                        std::string_view response_a, std::string_view response_b,
                        const ChatProvider& judge, const JudgeSettings& settings) {
  JudgeVerdict verdict;
  verdict.instruction_id = std::move(instruction_id);

  auto ask = [&](std::string_view first, std::string_view second,
                 std::string& raw) -> std::optional<ScorePairAB> {
    ChatRequest request;
    request.model_id = settings.model_id;
    request.system_prompt = settings.prompt.system_prompt;
    request.user_prompt = settings.prompt.render(instruction, first, second);
    request.temperature = settings.temperature;
    request.max_output_tokens = settings.max_output_tokens;
    for (int attempt = 0; attempt <= std::max(settings.max_reasks, 0); ++attempt) {
      request.regeneration = attempt;
      raw = judge.chat_complete(request);
      if (auto scores = parse_score_line(raw)) return scores;
    }
    return std::nullopt;
  };

  verdict.order1 = ask(response_a, response_b, verdict.raw_judgments[0]);
  if (auto swapped = ask(response_b, response_a, verdict.raw_judgments[1])) {
    verdict.order2 = ScorePairAB{swapped->second, swapped->first};
  }
  if (verdict.order1 && verdict.order2) {
    verdict.outcome = adjudicate_outcome(*verdict.order1, *verdict.order2);
  }
  return verdict;
}

json to_json_value(const JudgeVerdict& verdict) {
  return json{
      {"instruction_id", verdict.instruction_id},
      {"order1", optional_scores(verdict.order1)},
      {"order2", optional_scores(verdict.order2)},
      {"outcome", verdict.outcome ? json(to_string(*verdict.outcome)) : json(nullptr)},
      {"valid", verdict.valid()},
      {"raw", json::array({verdict.raw_judgments[0], verdict.raw_judgments[1]})}};
}

std::vector<JudgeVerdict> judge_all(std::span<const JudgeItem> items,
                                    const ChatProvider& judge,
                                    const JudgeSettings& settings, int parallelism) {
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  std::vector<JudgeVerdict> verdicts(items.size());
  parallel_for(items.size(), parallelism, [&](std::size_t i) {
    const JudgeItem& item = items[i];
    verdicts[i] = judge_pair(item.instruction_id, item.instruction,
                             item.response_a, item.response_b, judge, settings);
  });
  return verdicts;
}

double win_rate(std::size_t wins, std::size_t ties, std::size_t losses) {
  const std::size_t total = wins + ties + losses;
  if (total == 0) throw ValidationError("win rate of zero judged instructions");
  return (static_cast<double>(wins) - static_cast<double>(losses)) /
             static_cast<double>(total) +
         1.0;
}

WinRateSummary summarize(std::span<const JudgeVerdict> verdicts) {
  WinRateSummary summary;
  for (const auto& verdict : verdicts) {
    if (!verdict.outcome) {
      ++summary.invalid;
      continue;
    }
    switch (*verdict.outcome) {
      case JudgeOutcome::kWin: ++summary.wins; break;
      case JudgeOutcome::kTie: ++summary.ties; break;
      case JudgeOutcome::kLose: ++summary.losses; break;
    }
  }
  if (summary.wins + summary.ties + summary.losses > 0) {
    summary.win_rate = win_rate(summary.wins, summary.ties, summary.losses);
  }
  return summary;
}

json to_json_value(const WinRateSummary& summary) {
  return json{{"wins", summary.wins},
              {"ties", summary.ties},
              {"losses", summary.losses},
              {"invalid", summary.invalid},
              {"win_rate", optional_number(summary.win_rate)}};
}

}  // namespace srecycle
