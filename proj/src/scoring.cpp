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

#include "srecycle/scoring.hpp"

#include <optional>

#include <fmt/format.h>

#include "srecycle/errors.hpp"
#include "srecycle/worker_pool.hpp"

namespace srecycle {

using nlohmann::json;

PromptTemplates PromptTemplates::make(std::string conditional_wrapper,
                                      std::string reverse_query_wrapper) {
  PromptTemplates templates{std::move(conditional_wrapper),
                            std::move(reverse_query_wrapper)};
  templates.validate();
  return templates;
}

void PromptTemplates::validate() const {
  auto check = [](const std::string& tmpl, const char* name) {
    const std::size_t slots = count_occurrences(tmpl, kTemplateSlot);
    if (slots != 1) {
      throw ConfigError(fmt::format(
          "{} must contain exactly one \"{{}}\" slot, found {}", name, slots));
    }
  };
  check(conditional_wrapper, "conditional_wrapper");
  check(reverse_query_wrapper, "reverse_query_wrapper");
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string fill_slot(std::string_view tmpl, std::string_view value) {
  const std::size_t pos = tmpl.find(kTemplateSlot);
  if (pos == std::string_view::npos) return std::string(tmpl);
  std::string out;
  out.reserve(tmpl.size() + value.size());
  out.append(tmpl.substr(0, pos));
  out.append(value);
  out.append(tmpl.substr(pos + kTemplateSlot.size()));
  return out;
}

double mean_nll(const LogprobResponse& response) {
  if (response.target_token_logprobs.empty()) {
    throw EmptyTargetError("zero retained target tokens");
  }
  double sum = 0.0;
  for (double logprob : response.target_token_logprobs) sum += logprob;
  return -sum / static_cast<double>(response.target_token_logprobs.size());
}

namespace {

LogprobResponse request_logprobs(const Scorer& scorer, std::string context,
                                 std::string_view target) {
  LogprobRequest request{scorer.model_id, std::move(context), std::string(target),
                         scorer.max_total_tokens};
  LogprobResponse response = scorer.provider.score_logprobs(request);
  response.validate();
  return response;
}

LossBreakdown losses(const Scorer& scorer, std::string context,
                     std::string_view target) {
  const LogprobResponse with_context =
      request_logprobs(scorer, std::move(context), target);
  const LogprobResponse bare = request_logprobs(scorer, {}, target);
  // Echo-style backends cannot score the first token of a bare prompt, so
  // the two counts may differ by one; n is taken from the conditional side.
  return LossBreakdown{mean_nll(with_context), mean_nll(bare),
                       with_context.target_token_count(),
                       with_context.truncated || bare.truncated};
}

}  // namespace

double conditional_loss(const InstructionSample& sample,
                        const PromptTemplates& templates, const Scorer& scorer) {
  return mean_nll(request_logprobs(
      scorer,
      fill_slot(templates.conditional_wrapper, sample.effective_instruction()),
      sample.response));
}

double unconditional_loss(std::string_view target, const Scorer& scorer) {
  return mean_nll(request_logprobs(scorer, {}, target));
}

std::string build_reverse_query(std::string_view response,
                                const PromptTemplates& templates) {
  return fill_slot(templates.reverse_query_wrapper, response);
}

LossBreakdown forward_losses(const InstructionSample& sample,
                             const PromptTemplates& templates,
                             const Scorer& scorer) {
  return losses(
      scorer,
      fill_slot(templates.conditional_wrapper, sample.effective_instruction()),
      sample.response);
}

LossBreakdown reverse_losses(const InstructionSample& sample,
                             const PromptTemplates& templates,
                             const Scorer& scorer) {
  return losses(scorer, build_reverse_query(sample.response, templates),
                sample.effective_instruction());
}

double difficulty_ratio(const LossBreakdown& losses) {
  return std::exp(losses.loss_conditional - losses.loss_unconditional);
}

double ifd_score(const InstructionSample& sample,
                 const PromptTemplates& templates, const Scorer& scorer) {
  return difficulty_ratio(forward_losses(sample, templates, scorer));
}

double rifd_score(const InstructionSample& sample,
                  const PromptTemplates& templates, const Scorer& scorer) {
  return difficulty_ratio(reverse_losses(sample, templates, scorer));
}

ScoreReport score_sample(const InstructionSample& sample,
                         const PromptTemplates& templates, const Scorer& scorer) {
  ScoreReport report;
  report.forward = forward_losses(sample, templates, scorer);
  report.reverse = reverse_losses(sample, templates, scorer);
  report.ifd = difficulty_ratio(report.forward);
  report.rifd = difficulty_ratio(report.reverse);
  report.model_id = scorer.model_id;
  return report;
}

BatchScores score_batch(const DatasetManifest& manifest,
                        const PromptTemplates& templates, const Scorer& scorer,
                        int parallelism, const std::atomic<bool>* stop) {
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  const std::size_t n = manifest.samples.size();
  std::vector<std::optional<ScoreReport>> reports(n);
  std::vector<std::optional<ScoreFailure>> failures(n);

  std::vector<char> done(n, 0);
  parallel_for(
      n, parallelism,
      [&](std::size_t i) {
        const InstructionSample& sample = manifest.samples[i];
        try {
          reports[i] = score_sample(sample, templates, scorer);
        } catch (const EmptyTargetError& e) {
          failures[i] = ScoreFailure{sample.id, e.what(), false};
        } catch (const ProviderError& e) {
          failures[i] = ScoreFailure{sample.id, e.what(), true};
        }
        done[i] = 1;
      },
      stop);

  BatchScores out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!done[i]) out.interrupted = true;
    if (reports[i]) out.reports.emplace_back(manifest.samples[i].id, *reports[i]);
    if (failures[i]) out.failures.push_back(*failures[i]);
  }
  return out;
}

json score_row(const ScoredSample& scored) {
  const auto& [id, report] = scored;
  return json{{"id", id},
              {"ifd", report.ifd},
              {"rifd", report.rifd},
              {"loss_cond_fwd", report.forward.loss_conditional},
              {"loss_uncond_fwd", report.forward.loss_unconditional},
              {"loss_cond_rev", report.reverse.loss_conditional},
              {"loss_uncond_rev", report.reverse.loss_unconditional},
              {"n_fwd", report.forward.target_token_count},
              {"n_rev", report.reverse.target_token_count},
              {"truncated", report.truncated()},
              {"truncated_fwd", report.forward.truncated},
              {"truncated_rev", report.reverse.truncated},
              {"model_id", report.model_id}};
}

ScoredSample parse_score_row(const json& row) {
  try {
    ScoreReport report;
    report.ifd = row.at("ifd").get<double>();
    report.rifd = row.at("rifd").get<double>();
    report.forward.loss_conditional = row.at("loss_cond_fwd").get<double>();
    report.forward.loss_unconditional = row.at("loss_uncond_fwd").get<double>();
    report.reverse.loss_conditional = row.at("loss_cond_rev").get<double>();
    report.reverse.loss_unconditional = row.at("loss_uncond_rev").get<double>();
    report.forward.target_token_count = row.at("n_fwd").get<int>();
    report.reverse.target_token_count = row.at("n_rev").get<int>();
    const bool truncated = row.value("truncated", false);
    report.forward.truncated = row.value("truncated_fwd", truncated);
    report.reverse.truncated = row.value("truncated_rev", truncated);
    report.model_id = row.value("model_id", std::string{});
    return {row.at("id").get<std::string>(), std::move(report)};
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed score row: {}", e.what()));
  }
}

void write_score_dump(std::span<const ScoredSample> rows,
                      const std::filesystem::path& path) {
  std::vector<json> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(score_row(row));
  write_jsonl(path, out);
}

std::vector<ScoredSample> read_score_dump(const std::filesystem::path& path) {
  std::vector<ScoredSample> rows;
  for (const auto& row : read_jsonl(path)) rows.push_back(parse_score_row(row));
  return rows;
}

}  // namespace srecycle
