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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "srecycle/datamodel.hpp"
#include "srecycle/errors.hpp"
#include "srecycle/providers.hpp"
#include "srecycle/reflection.hpp"
#include "srecycle/scoring.hpp"

namespace srecycle {

// Selection strategies. SelectiveIfdRifd is the default two-metric method;
// the others exist for ablations.
struct SelectiveIfdRifd {
  friend bool operator==(SelectiveIfdRifd, SelectiveIfdRifd) = default;
};
struct RandomAccept {
  std::uint64_t seed = 0;
  friend bool operator==(RandomAccept, RandomAccept) = default;
};
struct CoherenceBest {
  friend bool operator==(CoherenceBest, CoherenceBest) = default;
};
struct PerplexityImprovement {
  friend bool operator==(PerplexityImprovement, PerplexityImprovement) = default;
};
struct IfdOnly {
  friend bool operator==(IfdOnly, IfdOnly) = default;
};
struct RifdOnly {
  friend bool operator==(RifdOnly, RifdOnly) = default;
};

using SelectionStrategy =
    std::variant<SelectiveIfdRifd, RandomAccept, CoherenceBest,
                 PerplexityImprovement, IfdOnly, RifdOnly>;

// "selective", "random", "coherence", "perplexity", "ifd_only", "rifd_only".
std::string strategy_name(const SelectionStrategy& strategy);
// `seed` is only used by "random". Throws ConfigError on unknown names.
SelectionStrategy parse_strategy(std::string_view name, std::uint64_t seed = 0);

bool needs_embeddings(const SelectionStrategy& strategy);

enum class Phase { kInstruction = 1, kResponse = 2 };

// Winner of one phase. `accepted` is true when the candidate was chosen.
struct PhaseDecision {
  InstructionSample selected;
  bool accepted = false;
};

// Higher IFD wins; an absent candidate or an exact tie keeps the original.
PhaseDecision phase1_select(const InstructionSample& original, double original_ifd,
                            const std::optional<InstructionSample>& candidate,
                            std::optional<double> candidate_ifd);

// Lower r-IFD wins; an absent candidate or an exact tie keeps `kept`.
PhaseDecision phase2_select(const InstructionSample& kept, double kept_rifd,
                            const std::optional<InstructionSample>& candidate,
                            std::optional<double> candidate_rifd);

// Per-pair quantities a strategy may compare. Only the ones the strategy
// needs have to be present.
struct CandidateMetrics {
  std::optional<double> ifd;
  std::optional<double> rifd;
  std::optional<double> coherence;        // cosine(instruction, response)
  std::optional<double> ppl_conditional;  // ppl(y|x)
};

// Name of the metric the strategy compares in `phase`, or empty for
// RandomAccept.
std::string_view strategy_metric(const SelectionStrategy& strategy, Phase phase);

// The value accept_candidate compares, or nullopt for RandomAccept.
std::optional<double> metric_value(const CandidateMetrics& metrics,
                                   const SelectionStrategy& strategy, Phase phase);

// True when the candidate replaces the original. Ties keep the original.
// Throws ValidationError when the strategy's metric is missing.
bool accept_candidate(const CandidateMetrics& original,
                      const CandidateMetrics& candidate,
                      const SelectionStrategy& strategy, Phase phase,
                      std::string_view sample_id);

// Fair coin from a stream seeded by (seed, sample id, phase); independent of
// processing order.
bool random_accept(std::uint64_t seed, std::string_view sample_id, Phase phase);

struct DiscardSplit {
  std::vector<ReflectionRecord> kept;
  std::vector<ReflectionRecord> discarded;
};

// Keeps the records whose reflected response was accepted.
DiscardSplit apply_discard_rule(std::vector<ReflectionRecord> records);

enum class TieBreak { kKeepOriginal };

struct PipelineConfig {
  SelectionStrategy strategy;
  TeacherSettings teacher;
  std::string student_model_id;
  int max_total_tokens = kDefaultTotalTokens;
  PromptTemplates templates;
  ReflectionPrompts prompts;
  int parallelism = 1;
  TieBreak tie_break = TieBreak::kKeepOriginal;

  void validate(bool have_embeddings) const;
};

struct PipelineProviders {
  const LogprobProvider& student;
  const ChatProvider& teacher;
  const EmbeddingProvider* embeddings = nullptr;
  std::string embedding_model_id;
};

struct PipelineHooks {
  // Called after each sample finishes, from worker threads.
  std::function<void(std::size_t done, std::size_t total)> progress;
  const std::atomic<bool>* stop = nullptr;
};

struct PipelineResult {
  std::vector<ReflectionRecord> records;  // source order
  DatasetManifest curated;                // kept finals, source order
  std::vector<ScoreFailure> failures;
  std::vector<TranscriptEntry> transcripts;
  std::vector<ScoredSample> original_scores;  // one per record
  std::vector<ScoredSample> final_scores;     // one per kept record
  std::size_t processed = 0;
  bool interrupted = false;

  std::size_t fatal_failures() const;
};

// Runs both reflection phases over every sample. Unscorable samples and
// provider failures land in `failures`; CacheCorruptionError aborts.
PipelineResult run_pipeline(const DatasetManifest& manifest,
                            const PipelineConfig& config,
                            const PipelineProviders& providers,
                            const PipelineHooks& hooks = {});

// floor(k * n / 100). Throws ConfigError unless 0 < k <= 100.
std::size_t subset_count(std::size_t n, double k_percent);

// Top k% by IFD, descending, ties by ascending id.
template <typename T, typename IdFn, typename IfdFn>
std::vector<T> subset_by_ifd(std::vector<T> items, double k_percent, IdFn id_of,
                             IfdFn ifd_of) {
  if (items.empty()) throw ValidationError("cannot subset an empty dataset");
  const std::size_t count = subset_count(items.size(), k_percent);
  std::stable_sort(items.begin(), items.end(), [&](const T& a, const T& b) {
    const double ia = ifd_of(a);
    const double ib = ifd_of(b);
    if (ia != ib) return ia > ib;
    return id_of(a) < id_of(b);
  });
  items.resize(count);
  return items;
}

// Uniform index in [0, bound) by rejection; identical on every platform.
std::uint64_t bounded_random(std::mt19937_64& engine, std::uint64_t bound);

// Seeded uniform sample of floor(k% * n) items without replacement, in the
// order drawn.
template <typename T>
std::vector<T> subset_random(std::vector<T> items, double k_percent,
                             std::uint64_t seed) {
  if (items.empty()) throw ValidationError("cannot subset an empty dataset");
  const std::size_t count = subset_count(items.size(), k_percent);
  std::mt19937_64 engine(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + bounded_random(engine, items.size() - i);
    std::swap(items[i], items[j]);
  }
  items.resize(count);
  return items;
}

std::vector<ScoredSample> subset_scores_by_ifd(std::vector<ScoredSample> rows,
                                               double k_percent);

}  // namespace srecycle
