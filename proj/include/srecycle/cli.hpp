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
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "srecycle/config.hpp"
#include "srecycle/providers.hpp"

namespace srecycle::cli {

struct CommandContext {
  const std::atomic<bool>* stop = nullptr;  // set by the SIGINT handler
  // Extra observer of pipeline progress (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
  std::ostream* err = nullptr;  // defaults to std::cerr
};

// Parses `args` (without the program name), runs the subcommand and maps
// errors to exit codes: 0 ok, 2 config/validation, 3 provider,
// 4 cache corruption, 130 interrupted.
int run_cli(const std::vector<std::string>& args, const CommandContext& context = {});

// The model services a command needs, wrapped in the response cache.
struct ProviderSet {
  std::shared_ptr<CacheCounters> counters = std::make_shared<CacheCounters>();
  std::shared_ptr<const LogprobProvider> student;
  std::shared_ptr<const ChatProvider> teacher;
  std::shared_ptr<const EmbeddingProvider> embeddings;
  std::shared_ptr<const ChatProvider> judge;
};

enum ProviderNeeds : unsigned {
  kNeedStudent = 1,
  kNeedTeacher = 2,
  kNeedEmbeddings = 4,  // only built when an embeddings block exists
  kNeedJudge = 8,
};

// Builds providers without contacting any service. Throws ConfigError on a
// missing fixture, URL, model id or API key variable.
ProviderSet make_providers(const RunConfig& config, unsigned needs);

// Refuses an output directory whose *-manifest.json files carry another
// config hash.
void guard_output_dir(const std::filesystem::path& dir, const std::string& config_hash);

int cmd_score(const RunConfig& config, const CommandContext& context);
int cmd_run(const RunConfig& config, const CommandContext& context);

struct SubsetOptions {
  std::filesystem::path scores;
  std::filesystem::path dataset;  // optional: emit dataset rows instead
  std::filesystem::path out;
  double k_percent = 100.0;
  std::string mode = "ifd";  // "ifd" or "random"
  std::uint64_t seed = 0;
  bool exclude_ifd_above_one = false;
};
int cmd_subset(const SubsetOptions& options, const CommandContext& context);

struct JudgeFiles {
  std::filesystem::path instructions;
  std::filesystem::path responses_a;
  std::filesystem::path responses_b;
};
int cmd_judge(const RunConfig& config, const JudgeFiles& files,
              const CommandContext& context);

struct StatsFiles {
  std::filesystem::path dataset;
  std::filesystem::path scores;
  std::filesystem::path out;
};
int cmd_stats(const RunConfig& config, const StatsFiles& files,
              const CommandContext& context);

}  // namespace srecycle::cli
