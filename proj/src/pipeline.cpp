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

#include "srecycle/pipeline.hpp"

#include <mutex>

#include <fmt/format.h>

#include "srecycle/worker_pool.hpp"

namespace srecycle {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool higher_is_better(std::string_view metric) {
  return metric == "ifd" || metric == "coherence";
}

struct PairScores {
  ScoreReport report;
  std::optional<double> coherence;
};

CandidateMetrics metrics_of(const PairScores& scores) {
  return CandidateMetrics{scores.report.ifd, scores.report.rifd, scores.coherence,
                          perplexity(scores.report.forward.loss_conditional)};
}

struct SampleOutcome {
  std::optional<ReflectionRecord> record;
  std::optional<ScoreFailure> failure;
  std::vector<TranscriptEntry> transcripts;
  std::optional<ScoreReport> original_report;
  std::optional<ScoreReport> final_report;
};

class SampleProcessor {
 public:
  SampleProcessor(const PipelineConfig& config, const PipelineProviders& providers)
      : config_(config),
        providers_(providers),
        scorer_{providers.student, config.student_model_id,
                config.max_total_tokens},
        coherence_(needs_embeddings(config.strategy)) {}

  SampleOutcome run(const InstructionSample& original) const {
    SampleOutcome out;
    try {
      process(original, out);
    } catch (const EmptyTargetError& e) {
      out = SampleOutcome{};
      out.failure = ScoreFailure{original.id, e.what(), false};
    } catch (const ProviderError& e) {
      out = SampleOutcome{};
      out.failure = ScoreFailure{original.id, e.what(), true};
    }
    return out;
  }

 private:
  PairScores score(const InstructionSample& sample) const {
    PairScores scores{score_sample(sample, config_.templates, scorer_), {}};
    if (coherence_) {
      const std::string model = providers_.embedding_model_id;
      scores.coherence = cosine_similarity(
          providers_.embeddings->embed({model, sample.effective_instruction()}),
          providers_.embeddings->embed({model, sample.response}));
    }
    return scores;
  }

  // Candidate scoring may fail without sinking the sample: the candidate is
  // then treated as absent.
  std::optional<PairScores> score_candidate(const InstructionSample& sample,
                                            ReflectionRecord& record,
                                            std::string_view what) const {
    try {
      return score(sample);
    } catch (const EmptyTargetError& e) {
      record.warnings.push_back(
          fmt::format("{} could not be scored: {}", what, e.what()));
      return std::nullopt;
    }
  }

  bool decide(const PairScores& original, const std::optional<PairScores>& candidate,
              Phase phase, const std::string& id, ScorePair& metric) const {
    metric.original = metric_value(metrics_of(original), config_.strategy, phase);
    if (!candidate) return false;
    metric.candidate = metric_value(metrics_of(*candidate), config_.strategy, phase);
    return accept_candidate(metrics_of(original), metrics_of(*candidate),
                            config_.strategy, phase, id);
  }

  void process(const InstructionSample& original, SampleOutcome& out) const {
    const PairScores original_scores = score(original);
    out.original_report = original_scores.report;

    ReflectionRecord record;
    record.original = original;
    record.strategy = strategy_name(config_.strategy);
    record.phase1_scores.original = original_scores.report.ifd;

    // Phase 1: reflect on the instruction, keep the better pair.
    const ParsedReflection parsed1 = reflect_instruction(
        original, config_.prompts.instruction, providers_.teacher, config_.teacher);
    record.raw_phase1_output = parsed1.raw;
    out.transcripts.push_back({original.id, 1, parsed1.raw, parsed1.ok(),
                               parsed1.attempts});
    for (const auto& w : parsed1.warnings) record.warnings.push_back(w);

    std::optional<PairScores> candidate_scores;
    if (parsed1.ok()) {
      InstructionSample candidate = InstructionSample::make(
          *parsed1.new_instruction, "", *parsed1.new_answer);
      if (candidate.id == original.id) {
        record.warnings.push_back("instruction candidate equals the original");
      } else {
        candidate_scores = score_candidate(candidate, record, "instruction candidate");
        if (candidate_scores) record.phase1_scores.candidate = candidate_scores->report.ifd;
        record.instruction_candidate = std::move(candidate);
      }
    } else {
      record.warnings.push_back("instruction reflection did not parse");
    }

    record.phase1_accepted = decide(original_scores, candidate_scores,
                                    Phase::kInstruction, original.id,
                                    record.phase1_metric);
    record.phase1_selected =
        record.phase1_accepted ? *record.instruction_candidate : original;
    const PairScores& kept_scores =
        record.phase1_accepted ? *candidate_scores : original_scores;

    // Phase 2: reflect on the winner's response.
    const InstructionSample& kept = record.phase1_selected;
    record.phase2_scores.original = kept_scores.report.rifd;
    const ParsedReflection parsed2 = reflect_response(
        kept, config_.prompts.response, providers_.teacher, config_.teacher);
    record.raw_phase2_output = parsed2.raw;
    out.transcripts.push_back({original.id, 2, parsed2.raw, parsed2.ok(),
                               parsed2.attempts});
    for (const auto& w : parsed2.warnings) record.warnings.push_back(w);

    if (!parsed2.ok()) {
      record.warnings.push_back("response reflection did not parse");
      record.phase2_metric.original =
          metric_value(metrics_of(kept_scores), config_.strategy, Phase::kResponse);
      record.outcome = OutcomeTag::kReflectionFailedDiscarded;
      out.record = std::move(record);
      return;
    }

    record.response_candidate = *parsed2.new_answer;
    InstructionSample reflected =
        InstructionSample::make(kept.instruction, kept.input, *parsed2.new_answer);
    std::optional<PairScores> reflected_scores;
    if (reflected.id == kept.id) {
      record.warnings.push_back("response candidate equals the kept response");
    } else {
      reflected_scores = score_candidate(reflected, record, "response candidate");
      if (reflected_scores) record.phase2_scores.candidate = reflected_scores->report.rifd;
    }
    record.phase2_accepted = decide(kept_scores, reflected_scores, Phase::kResponse,
                                    original.id, record.phase2_metric);
    record.outcome = derive_outcome(record.phase1_accepted, record.phase2_accepted, false);
    if (record.phase2_accepted) {
      record.final_pair = std::move(reflected);
      out.final_report = reflected_scores->report;
    }
    out.record = std::move(record);
  }

  const PipelineConfig& config_;
  const PipelineProviders& providers_;
  Scorer scorer_;
  bool coherence_;
};

}  // namespace

std::string strategy_name(const SelectionStrategy& strategy) {
  return std::visit(
      Overloaded{[](SelectiveIfdRifd) { return "selective"; },
                 [](RandomAccept) { return "random"; },
                 [](CoherenceBest) { return "coherence"; },
                 [](PerplexityImprovement) { return "perplexity"; },
                 [](IfdOnly) { return "ifd_only"; },
                 [](RifdOnly) { return "rifd_only"; }},
      strategy);
}

SelectionStrategy parse_strategy(std::string_view name, std::uint64_t seed) {
  if (name == "selective") return SelectiveIfdRifd{};
  if (name == "random") return RandomAccept{seed};
  if (name == "coherence") return CoherenceBest{};
  if (name == "perplexity") return PerplexityImprovement{};
  if (name == "ifd_only") return IfdOnly{};
  if (name == "rifd_only") return RifdOnly{};
  throw ConfigError(fmt::format(
      "unknown strategy \"{}\" (expected selective, random, coherence, "
      "perplexity, ifd_only or rifd_only)",
      name));
}

bool needs_embeddings(const SelectionStrategy& strategy) {
  return std::holds_alternative<CoherenceBest>(strategy);
}

PhaseDecision phase1_select(const InstructionSample& original, double original_ifd,
                            const std::optional<InstructionSample>& candidate,
                            std::optional<double> candidate_ifd) {
  if (candidate && candidate_ifd && *candidate_ifd > original_ifd) {
    return {*candidate, true};
  }
  return {original, false};
}

PhaseDecision phase2_select(const InstructionSample& kept, double kept_rifd,
                            const std::optional<InstructionSample>& candidate,
                            std::optional<double> candidate_rifd) {
  if (candidate && candidate_rifd && *candidate_rifd < kept_rifd) {
    return {*candidate, true};
  }
  return {kept, false};
}

std::string_view strategy_metric(const SelectionStrategy& strategy, Phase phase) {
  return std::visit(
      Overloaded{[&](SelectiveIfdRifd) -> std::string_view {
                   return phase == Phase::kInstruction ? "ifd" : "rifd";
                 },
                 [](RandomAccept) -> std::string_view { return ""; },
                 [](CoherenceBest) -> std::string_view { return "coherence"; },
                 [](PerplexityImprovement) -> std::string_view {
                   return "ppl_conditional";
                 },
                 [](IfdOnly) -> std::string_view { return "ifd"; },
                 [](RifdOnly) -> std::string_view { return "rifd"; }},
      strategy);
}

std::optional<double> metric_value(const CandidateMetrics& metrics,
                                   const SelectionStrategy& strategy, Phase phase) {
  const std::string_view metric = strategy_metric(strategy, phase);
  if (metric == "ifd") return metrics.ifd;
  if (metric == "rifd") return metrics.rifd;
  if (metric == "coherence") return metrics.coherence;
  if (metric == "ppl_conditional") return metrics.ppl_conditional;
  return std::nullopt;
}

bool accept_candidate(const CandidateMetrics& original,
                      const CandidateMetrics& candidate,
                      const SelectionStrategy& strategy, Phase phase,
                      std::string_view sample_id) {
  if (const auto* random = std::get_if<RandomAccept>(&strategy)) {
    return random_accept(random->seed, sample_id, phase);
  }
  const std::string_view metric = strategy_metric(strategy, phase);
  const auto a = metric_value(original, strategy, phase);
  const auto b = metric_value(candidate, strategy, phase);
  if (!a || !b) {
    throw ValidationError(fmt::format("strategy {} needs metric {} for sample {}",
                                      strategy_name(strategy), metric, sample_id));
  }
  return higher_is_better(metric) ? *b > *a : *b < *a;
}

bool random_accept(std::uint64_t seed, std::string_view sample_id, Phase phase) {
  std::vector<std::uint32_t> material{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(phase)};
  for (unsigned char c : sample_id) material.push_back(c);
  std::seed_seq sequence(material.begin(), material.end());
  std::mt19937_64 engine(sequence);
  return (engine() >> 63) != 0;
}

DiscardSplit apply_discard_rule(std::vector<ReflectionRecord> records) {
  DiscardSplit split;
  for (auto& record : records) {
    (is_discarded(record.outcome) ? split.discarded : split.kept)
        .push_back(std::move(record));
  }
  return split;
}

void PipelineConfig::validate(bool have_embeddings) const {
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (max_total_tokens < kMinTotalTokens) {
    throw ConfigError(fmt::format("max_total_tokens must be >= {}", kMinTotalTokens));
  }
  if (teacher.max_regenerations < 0) {
    throw ConfigError("max_regenerations must be >= 0");
  }
  if (!(teacher.temperature >= 0.0)) throw ConfigError("teacher temperature must be >= 0");
  if (needs_embeddings(strategy) && !have_embeddings) {
    throw ConfigError(fmt::format("strategy {} requires an embeddings provider",
                                  strategy_name(strategy)));
  }
  templates.validate();
  prompts.instruction.validate();
  prompts.response.validate();
}

std::size_t PipelineResult::fatal_failures() const {
  return static_cast<std::size_t>(std::count_if(
      failures.begin(), failures.end(), [](const auto& f) { return f.fatal; }));
}

PipelineResult run_pipeline(const DatasetManifest& manifest,
                            const PipelineConfig& config,
                            const PipelineProviders& providers,
                            const PipelineHooks& hooks) {
  config.validate(providers.embeddings != nullptr);
  const std::size_t n = manifest.samples.size();
  std::vector<std::optional<SampleOutcome>> outcomes(n);
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  const SampleProcessor processor(config, providers);

  parallel_for(
      n, config.parallelism,
      [&](std::size_t i) {
        outcomes[i] = processor.run(manifest.samples[i]);
        const std::size_t finished = ++done;
        if (hooks.progress) {
          std::lock_guard lock(progress_mutex);
          hooks.progress(finished, n);
        }
      },
      hooks.stop);

  PipelineResult result;
  result.curated.source_name = manifest.source_name;
  for (std::size_t i = 0; i < n; ++i) {
    if (!outcomes[i]) {
      result.interrupted = true;
      continue;
    }
    ++result.processed;
    SampleOutcome& outcome = *outcomes[i];
    for (auto& t : outcome.transcripts) result.transcripts.push_back(std::move(t));
    if (outcome.failure) result.failures.push_back(std::move(*outcome.failure));
    if (!outcome.record) continue;
    const std::string& id = outcome.record->original.id;
    result.original_scores.emplace_back(id, *outcome.original_report);
    if (outcome.record->final_pair) {
      result.final_scores.emplace_back(outcome.record->final_pair->id,
                                       *outcome.final_report);
      result.curated.samples.push_back(*outcome.record->final_pair);
    }
    result.records.push_back(std::move(*outcome.record));
  }
  return result;
}

std::size_t subset_count(std::size_t n, double k_percent) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) {
    throw ConfigError(fmt::format("k_percent must be in (0, 100], got {}", k_percent));
  }
  return static_cast<std::size_t>(std::floor(k_percent * static_cast<double>(n) / 100.0));
}

std::uint64_t bounded_random(std::mt19937_64& engine, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
  for (;;) {
    const std::uint64_t value = engine();
    if (value < limit) return value % bound;
  }
}

std::vector<ScoredSample> subset_scores_by_ifd(std::vector<ScoredSample> rows,
                                               double k_percent) {
  return subset_by_ifd(
      std::move(rows), k_percent, [](const ScoredSample& s) -> const std::string& {
        return s.first;
      },
      [](const ScoredSample& s) { return s.second.ifd; });
}

}  // namespace srecycle
