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

#include "srecycle/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <unordered_map>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "srecycle/analytics.hpp"
#include "srecycle/clock.hpp"
#include "srecycle/datamodel.hpp"
#include "srecycle/errors.hpp"
#include "srecycle/hashing.hpp"
#include "srecycle/http_providers.hpp"
#include "srecycle/mock_providers.hpp"
#include "srecycle/pipeline.hpp"
#include "srecycle/reflection.hpp"
#include "srecycle/scoring.hpp"

namespace srecycle::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ostream& err_of(const CommandContext& context) {
  return context.err ? *context.err : std::cerr;
}

void require(const std::string& value, std::string_view name) {
  if (value.empty()) throw ConfigError(fmt::format("{} is required", name));
}

HttpEndpoint endpoint_for(const ProviderBlock& block, std::string_view name) {
  require(block.base_url, fmt::format("{}.base_url", name));
  require(block.model_id, fmt::format("{}.model_id", name));
  HttpEndpoint endpoint{block.base_url, {}, std::chrono::seconds(600)};
  if (!block.api_key_env.empty()) {
    const char* key = std::getenv(block.api_key_env.c_str());
    if (!key || !*key) {
      throw ConfigError(fmt::format("{} needs the API key variable {}, which is not set",
                                    name, block.api_key_env));
    }
    endpoint.api_key = key;
  }
  return endpoint;
}

MockFixture fixture_for(const ProviderBlock& block, std::string_view name) {
  require(block.mock_fixture, fmt::format("{}.mock_fixture", name));
  return MockFixture::load(block.mock_fixture);
}

std::shared_ptr<const ChatProvider> chat_backend(const ProviderBlock& block,
                                                 std::string_view name) {
  if (block.is_mock()) {
    return std::make_shared<ScriptedChatModel>(
        ScriptedChatModel::from_json(fixture_for(block, name).chat));
  }
  return std::make_shared<OpenAIChatClient>(endpoint_for(block, name));
}

std::string percent(double fraction) {
  return fmt::format("{:.4g}%", fraction * 100.0);
}

json manifest_header(std::string_view command, std::string_view status,
                     const std::string& config_hash) {
  return json{{"command", command},
              {"status", status},
              {"config_hash", config_hash},
              {"schema_version", kSchemaVersion}};
}

void write_json(const fs::path& path, const json& value) {
  write_text_file(path, value.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
}

json failure_row(const ScoreFailure& failure) {
  return json{{"id", failure.id}, {"reason", failure.reason}, {"fatal", failure.fatal}};
}

PromptTemplates templates_of(const RunConfig& config) {
  PromptTemplates templates;
  if (!config.conditional_wrapper.empty()) {
    templates.conditional_wrapper = config.conditional_wrapper;
  }
  if (!config.reverse_query_wrapper.empty()) {
    templates.reverse_query_wrapper = config.reverse_query_wrapper;
  }
  templates.validate();
  return templates;
}

IngestReport ingest(const RunConfig& config, const CommandContext& context) {
  require(config.dataset_path, "dataset_path");
  std::optional<DatasetFormat> format;
  if (!config.dataset_format.empty()) format = parse_dataset_format(config.dataset_format);
  IngestReport report = ingest_dataset(config.dataset_path, format,
                                       fs::path(config.dataset_path).stem().string());
  err_of(context) << fmt::format(
      "ingested {} of {} records ({} empty, {} duplicate dropped)\n",
      report.manifest.samples.size(), report.records_read, report.dropped_empty,
      report.dropped_duplicate);
  return report;
}

json ingest_counts(const IngestReport& report) {
  return json{{"records_read", report.records_read},
              {"samples", report.manifest.samples.size()},
              {"dropped_empty", report.dropped_empty},
              {"dropped_duplicate", report.dropped_duplicate}};
}

std::function<void(std::size_t, std::size_t)> progress_printer(
    std::string_view label, const CommandContext& context) {
  auto last = std::make_shared<std::size_t>(0);
  return [label = std::string(label), last, &context](std::size_t done,
                                                      std::size_t total) {
    const std::size_t pct = total ? done * 100 / total : 100;
    if (pct != *last || done == total) {
      *last = pct;
      err_of(context) << fmt::format("{}: {}/{}\n", label, done, total);
    }
    if (context.progress) context.progress(done, total);
  };
}

json stats_or_error(std::span<const InstructionSample> samples,
                    std::span<const ScoredSample> scores, const StatsOptions& options) {
  try {
    return to_json_value(dataset_statistics(samples, scores, options));
  } catch (const ValidationError& e) {
    return json{{"error", e.what()}};
  }
}

std::vector<json> read_rows_with_ids(const fs::path& path) {
  std::vector<json> rows = read_jsonl(path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_object() ||
        !(rows[i].contains("instruction_id") || rows[i].contains("id"))) {
      throw ValidationError(
          fmt::format("{}: row {} has no instruction_id", path.string(), i));
    }
  }
  return rows;
}

std::string id_of_row(const json& row) {
  const json& id = row.contains("instruction_id") ? row["instruction_id"] : row["id"];
  return id.is_string() ? id.get<std::string>() : id.dump();
}

std::string text_field(const json& row, const char* key, const fs::path& path) {
  if (!row.contains(key) || !row[key].is_string()) {
    throw ValidationError(fmt::format("{}: row {} has no string \"{}\"",
                                      path.string(), id_of_row(row), key));
  }
  return row[key].get<std::string>();
}

}  // namespace

ProviderSet make_providers(const RunConfig& config, unsigned needs) {
  ProviderSet set;
  CacheOptions options;
  if (!config.cache_dir.empty()) {
    options.cache = std::make_shared<const ResponseCache>(config.cache_dir);
  }
  options.retry.max_attempts = config.retry_max_attempts;
  options.retry.initial_backoff = std::chrono::milliseconds(config.retry_initial_backoff_ms);
  options.offline = config.offline;
  options.counters = set.counters;

  if (needs & kNeedStudent) {
    std::shared_ptr<const LogprobProvider> inner;
    const ScorerBlock& block = config.scorer;
    if (block.is_mock()) {
      inner = std::make_shared<TableLogprobModel>(fixture_for(block, "scorer").logprobs);
    } else if (block.backend == "openai_echo") {
      inner = std::make_shared<EchoLogprobClient>(endpoint_for(block, "scorer"));
    } else {
      inner = std::make_shared<LogprobRouteClient>(endpoint_for(block, "scorer"));
    }
    set.student = std::make_shared<CachedLogprobProvider>(inner, options);
  }
  if (needs & kNeedTeacher) {
    set.teacher = std::make_shared<CachedChatProvider>(
        chat_backend(config.teacher, "teacher"), options);
  }
  if (needs & kNeedJudge) {
    set.judge = std::make_shared<CachedChatProvider>(chat_backend(config.judge, "judge"),
                                                     options);
  }
  if ((needs & kNeedEmbeddings) && config.embeddings) {
    const ProviderBlock& block = *config.embeddings;
    std::shared_ptr<const EmbeddingProvider> inner;
    if (block.is_mock()) {
      const std::size_t dim = block.mock_fixture.empty()
                                  ? 64
                                  : fixture_for(block, "embeddings").embedding_dim;
      inner = std::make_shared<HashingEmbeddingModel>(dim);
    } else {
      inner = std::make_shared<OpenAIEmbeddingClient>(endpoint_for(block, "embeddings"));
    }
    set.embeddings = std::make_shared<CachedEmbeddingProvider>(inner, options);
  }
  return set;
}

void guard_output_dir(const fs::path& dir, const std::string& config_hash) {
  if (!fs::exists(dir)) return;
  if (!fs::is_directory(dir)) {
    throw ConfigError(fmt::format("output_dir {} is not a directory", dir.string()));
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!name.ends_with("-manifest.json")) continue;
    json manifest = json::parse(read_text_file(entry.path()), nullptr, false);
    const std::string found = manifest.is_object()
                                  ? manifest.value("config_hash", std::string{})
                                  : std::string{};
    if (found != config_hash) {
      throw ConfigError(fmt::format(
          "{} belongs to config {}, not {}; use another output_dir",
          entry.path().string(), found.empty() ? "<unknown>" : found, config_hash));
    }
  }
}

int cmd_score(const RunConfig& config, const CommandContext& context) {
  require(config.output_dir, "output_dir");
  const std::string hash = config.hash();
  const fs::path out = config.output_dir;
  guard_output_dir(out, hash);
  const IngestReport ingested = ingest(config, context);
  const ProviderSet providers = make_providers(config, kNeedStudent);
  const Scorer scorer{*providers.student, config.scorer.model_id,
                      config.scorer.max_total_tokens};

  const BatchScores batch = score_batch(ingested.manifest, templates_of(config), scorer,
                                        config.parallelism, context.stop);
  std::size_t fatal = 0;
  for (const auto& f : batch.failures) fatal += f.fatal ? 1 : 0;

  std::ostream& err = err_of(context);
  err << fmt::format("scored {} of {} samples, {} failures ({} fatal)\n",
                     batch.reports.size(), ingested.manifest.samples.size(),
                     batch.failures.size(), fatal);
  err << "cache hits: " << percent(providers.counters->hit_fraction()) << "\n";

  const std::string status =
      batch.interrupted ? "interrupted" : (fatal ? "incomplete" : "completed");
  json manifest = manifest_header("score", status, hash);
  manifest["dataset_path"] = config.dataset_path;
  manifest["ingest"] = ingest_counts(ingested);
  manifest["scored"] = batch.reports.size();
  manifest["failures"] = batch.failures.size();
  manifest["fatal_failures"] = fatal;
  manifest["scorer_model_id"] = config.scorer.model_id;
  manifest["created_at"] = utc_timestamp();

  if (!batch.interrupted) {
    write_score_dump(batch.reports, out / "scores.jsonl");
    std::vector<json> rows;
    for (const auto& f : batch.failures) rows.push_back(failure_row(f));
    write_jsonl(out / "score-failures.jsonl", rows);
  }
  write_json(out / "score-manifest.json", manifest);
  if (batch.interrupted) return static_cast<int>(ExitCode::kInterrupted);
  return fatal ? static_cast<int>(ExitCode::kProvider) : 0;
}

int cmd_run(const RunConfig& config, const CommandContext& context) {
  require(config.output_dir, "output_dir");
  const std::string hash = config.hash();
  const fs::path out = config.output_dir;
  guard_output_dir(out, hash);

  PipelineConfig pipeline;
  pipeline.strategy = parse_strategy(config.strategy, config.seed);
  pipeline.teacher = TeacherSettings{config.teacher.model_id, config.teacher.temperature,
                                     config.teacher.max_output_tokens,
                                     config.teacher.max_regenerations};
  pipeline.student_model_id = config.scorer.model_id;
  pipeline.max_total_tokens = config.scorer.max_total_tokens;
  pipeline.templates = templates_of(config);
  if (!config.prompt_overrides_dir.empty()) {
    pipeline.prompts = ReflectionPrompts::load(config.prompt_overrides_dir);
  }
  pipeline.parallelism = config.parallelism;
  pipeline.validate(config.embeddings.has_value());

  const IngestReport ingested = ingest(config, context);
  const ProviderSet providers =
      make_providers(config, kNeedStudent | kNeedTeacher | kNeedEmbeddings);
  const std::string embedding_model =
      config.embeddings ? config.embeddings->model_id : std::string{};
  const PipelineProviders services{*providers.student, *providers.teacher,
                                   providers.embeddings.get(), embedding_model};

  PipelineHooks hooks;
  hooks.stop = context.stop;
  hooks.progress = progress_printer("run", context);
  const std::string started_at = utc_timestamp();
  PipelineResult result = run_pipeline(ingested.manifest, pipeline, services, hooks);

  json manifest = manifest_header("run", "completed", hash);
  manifest["dataset_path"] = config.dataset_path;
  manifest["ingest"] = ingest_counts(ingested);
  manifest["strategy"] = strategy_name(pipeline.strategy);
  manifest["models"] = {
      {"teacher", config.teacher.model_id},
      {"scorer", config.scorer.model_id},
      {"embeddings", config.embeddings ? json(embedding_model) : json(nullptr)}};
  manifest["started_at"] = started_at;

  std::ostream& err = err_of(context);
  if (result.interrupted) {
    manifest["status"] = "interrupted";
    manifest["processed"] = result.processed;
    manifest["finished_at"] = utc_timestamp();
    write_json(out / "run-manifest.json", manifest);
    err << fmt::format("interrupted after {} of {} samples; rerun to resume\n",
                       result.processed, ingested.manifest.samples.size());
    return static_cast<int>(ExitCode::kInterrupted);
  }

  const std::vector<OutcomeShare> shares = component_distribution(result.records);
  json counts = json::object();
  for (OutcomeTag tag : kAllOutcomes) counts[std::string(to_string(tag))] = 0;
  for (const auto& share : shares) counts[std::string(to_string(share.tag))] = share.count;

  std::vector<InstructionSample> originals;
  for (const auto& record : result.records) originals.push_back(record.original);
  StatsOptions stats_options{config.include_truncated_in_stats,
                             providers.embeddings.get(), embedding_model};
  json stats{
      {"original", stats_or_error(originals, result.original_scores, stats_options)},
      {"curated", result.curated.samples.empty()
                      ? json{{"error", "no curated samples"}}
                      : stats_or_error(result.curated.samples, result.final_scores,
                                       stats_options)},
      {"components", to_json_value(shares)},
      {"metadata",
       {{"ppl_aggregation", kPplAggregation},
        {"include_truncated", config.include_truncated_in_stats},
        {"scorer_model_id", config.scorer.model_id}}}};

  const std::size_t fatal = result.fatal_failures();
  const std::size_t kept = result.curated.samples.size();
  manifest["status"] = fatal ? "incomplete" : "completed";
  manifest["counts"] = counts;
  manifest["records"] = result.records.size();
  manifest["kept"] = kept;
  manifest["discarded"] = result.records.size() - kept;
  manifest["failures"] = result.failures.size();
  manifest["fatal_failures"] = fatal;
  manifest["finished_at"] = utc_timestamp();

  std::vector<json> failure_rows, transcript_rows;
  for (const auto& f : result.failures) failure_rows.push_back(failure_row(f));
  for (const auto& t : result.transcripts) transcript_rows.push_back(to_json_value(t));
  write_records(result.records, out / "records.jsonl");
  write_curated(result.records, out / "curated.jsonl");
  write_jsonl(out / "failures.jsonl", failure_rows);
  write_jsonl(out / "transcripts.jsonl", transcript_rows);
  write_json(out / "stats.json", stats);
  write_json(out / "run-manifest.json", manifest);

  err << fmt::format("kept {} of {} records, {} failures ({} fatal)\n", kept,
                     result.records.size(), result.failures.size(), fatal);
  err << "cache hits: " << percent(providers.counters->hit_fraction()) << "\n";
  return fatal ? static_cast<int>(ExitCode::kProvider) : 0;
}

int cmd_subset(const SubsetOptions& options, const CommandContext& context) {
  if (options.mode != "ifd" && options.mode != "random") {
    throw ConfigError(fmt::format("subset mode must be ifd or random, got {}",
                                  options.mode));
  }
  std::vector<ScoredSample> rows = read_score_dump(options.scores);
  const std::size_t total = rows.size();
  if (options.exclude_ifd_above_one) {
    std::erase_if(rows, [](const ScoredSample& s) { return s.second.ifd > 1.0; });
  }
  rows = options.mode == "ifd" ? subset_scores_by_ifd(std::move(rows), options.k_percent)
                               : subset_random(std::move(rows), options.k_percent,
                                               options.seed);
  std::vector<json> out;
  if (options.dataset.empty()) {
    for (const auto& row : rows) out.push_back(score_row(row));
  } else {
    const IngestReport ingested = ingest_dataset(options.dataset);
    std::unordered_map<std::string, const InstructionSample*> by_id;
    for (const auto& s : ingested.manifest.samples) by_id.emplace(s.id, &s);
    for (const auto& [id, report] : rows) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw ValidationError(fmt::format("scored sample {} is not in {}", id,
                                          options.dataset.string()));
      }
      out.push_back(json(*it->second));
    }
  }
  write_jsonl(options.out, out);
  err_of(context) << fmt::format("selected {} of {} rows ({} mode, k={}%)\n", out.size(),
                                 total, options.mode, options.k_percent);
  return 0;
}

int cmd_judge(const RunConfig& config, const JudgeFiles& files,
              const CommandContext& context) {
  require(config.output_dir, "output_dir");
  const std::string hash = config.hash();
  const fs::path out = config.output_dir;
  guard_output_dir(out, hash);

  const auto instructions = read_rows_with_ids(files.instructions);
  const auto answers_a = read_rows_with_ids(files.responses_a);
  const auto answers_b = read_rows_with_ids(files.responses_b);
  for (const auto* other : {&answers_a, &answers_b}) {
    const auto& path = other == &answers_a ? files.responses_a : files.responses_b;
    const std::size_t n = std::max(instructions.size(), other->size());
    for (std::size_t i = 0; i < n; ++i) {
      const std::string want = i < instructions.size() ? id_of_row(instructions[i]) : "<none>";
      const std::string got = i < other->size() ? id_of_row((*other)[i]) : "<none>";
      if (want != got) {
        throw ValidationError(fmt::format(
            "instruction id mismatch at row {}: {} has {}, {} has {}", i,
            files.instructions.string(), want, path.string(), got));
      }
    }
  }

  std::vector<JudgeItem> items;
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    std::string question = text_field(instructions[i], "instruction", files.instructions);
    const std::string input = instructions[i].value("input", std::string{});
    if (!is_blank(input)) question += "\n\n" + input;
    items.push_back({id_of_row(instructions[i]), std::move(question),
                     text_field(answers_a[i], "response", files.responses_a),
                     text_field(answers_b[i], "response", files.responses_b)});
  }

  const ProviderSet providers = make_providers(config, kNeedJudge);
  JudgeSettings settings;
  settings.model_id = config.judge.model_id;
  settings.temperature = config.judge.temperature;
  settings.max_output_tokens = config.judge.max_output_tokens;
  const std::vector<JudgeVerdict> verdicts =
      judge_all(items, *providers.judge, settings, config.parallelism);
  const WinRateSummary summary = summarize(verdicts);

  std::vector<json> rows;
  for (const auto& v : verdicts) rows.push_back(to_json_value(v));
  write_jsonl(out / "verdicts.jsonl", rows);
  write_json(out / "summary.json", to_json_value(summary));
  json manifest = manifest_header("judge", "completed", hash);
  manifest["instructions"] = files.instructions.string();
  manifest["responses_a"] = files.responses_a.string();
  manifest["responses_b"] = files.responses_b.string();
  manifest["judge_model_id"] = config.judge.model_id;
  manifest["created_at"] = utc_timestamp();
  write_json(out / "judge-manifest.json", manifest);

  err_of(context) << fmt::format(
      "wins {} ties {} losses {} invalid {} win rate {}\n", summary.wins, summary.ties,
      summary.losses, summary.invalid,
      summary.win_rate ? fmt::format("{:.3f}", *summary.win_rate) : "n/a");
  return 0;
}

int cmd_stats(const RunConfig& config, const StatsFiles& files,
              const CommandContext& context) {
  const IngestReport ingested = ingest_dataset(files.dataset);
  const std::vector<ScoredSample> scores = read_score_dump(files.scores);
  const ProviderSet providers = make_providers(config, kNeedEmbeddings);
  StatsOptions options{config.include_truncated_in_stats, providers.embeddings.get(),
                       config.embeddings ? config.embeddings->model_id : std::string{}};
  const DatasetStats stats =
      dataset_statistics(ingested.manifest.samples, scores, options);
  json out = to_json_value(stats);
  out["metadata"] = {{"ppl_aggregation", kPplAggregation},
                     {"include_truncated", config.include_truncated_in_stats}};
  const fs::path path = files.out.empty()
                            ? fs::path(config.output_dir.empty() ? "." : config.output_dir) /
                                  "stats.json"
                            : files.out;
  write_json(path, out);
  err_of(context) << fmt::format("stats over {} samples ({} truncated excluded)\n",
                                 stats.n_samples, stats.n_excluded_truncated);
  return 0;
}

int run_cli(const std::vector<std::string>& args, const CommandContext& context) {
  CLI::App app{"Selective reflection data curation: score, reflect, select, judge."};
  app.name("srecycle");
  app.require_subcommand(1);

  std::string config_path;
  std::string mock_fixture;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "TOML or JSON run configuration");
    sub->add_option("--mock", mock_fixture,
                    "use the mock backend with this fixture for every model service");
    sub->allow_extras();
  };

  CLI::App* score = app.add_subcommand("score", "score IFD and r-IFD for a dataset");
  add_common(score);
  CLI::App* run = app.add_subcommand("run", "run both reflection phases and curate");
  add_common(run);

  SubsetOptions subset_options;
  CLI::App* subset = app.add_subcommand("subset", "select the top or a random k%");
  subset->add_option("--scores", subset_options.scores, "scores.jsonl")->required();
  subset->add_option("--k", subset_options.k_percent, "percentage in (0, 100]")
      ->required();
  subset->add_option("--mode", subset_options.mode, "ifd or random");
  subset->add_option("--seed", subset_options.seed, "seed for random mode");
  subset->add_option("--dataset", subset_options.dataset,
                     "emit these dataset rows instead of score rows");
  subset->add_option("--out", subset_options.out, "output JSONL")->required();
  subset->add_flag("--exclude-ifd-above-one", subset_options.exclude_ifd_above_one,
                   "drop samples with IFD > 1 before selecting");

  JudgeFiles judge_files;
  CLI::App* judge = app.add_subcommand("judge", "dual-order pairwise judging");
  add_common(judge);
  judge->add_option("--instructions", judge_files.instructions)->required();
  judge->add_option("--responses-a", judge_files.responses_a)->required();
  judge->add_option("--responses-b", judge_files.responses_b)->required();

  StatsFiles stats_files;
  CLI::App* stats = app.add_subcommand("stats", "dataset statistics from a score dump");
  add_common(stats);
  stats->add_option("--dataset", stats_files.dataset)->required();
  stats->add_option("--scores", stats_files.scores)->required();
  stats->add_option("--out", stats_files.out, "stats.json path");

  std::ostream& err = err_of(context);
  std::vector<std::string> argv_storage{"srecycle"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kConfig);
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    std::vector<std::string> overrides;
    if (chosen != subset) {
      for (const std::string& extra : chosen->remaining()) {
        if (!extra.starts_with("--") || extra.find('=') == std::string::npos) {
          throw ConfigError(fmt::format("unexpected argument \"{}\"", extra));
        }
        overrides.push_back(extra);
      }
    }
    if (!mock_fixture.empty()) {
      for (const char* block : {"teacher", "scorer", "judge"}) {
        overrides.insert(overrides.begin(),
                         {fmt::format("--{}.backend=mock", block),
                          fmt::format("--{}.mock_fixture={}", block, mock_fixture)});
      }
    }
    std::optional<fs::path> path;
    if (!config_path.empty()) path = config_path;

    if (chosen == subset) return cmd_subset(subset_options, context);
    const RunConfig config = load_run_config(path, overrides);
    if (chosen == score) return cmd_score(config, context);
    if (chosen == run) return cmd_run(config, context);
    if (chosen == judge) return cmd_judge(config, judge_files, context);
    return cmd_stats(config, stats_files, context);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kConfig);
  }
}

}  // namespace srecycle::cli
