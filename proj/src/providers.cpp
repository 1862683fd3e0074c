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

#include "srecycle/providers.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "srecycle/clock.hpp"
#include "srecycle/datamodel.hpp"
#include "srecycle/hashing.hpp"

namespace srecycle {

using nlohmann::json;

void LogprobRequest::validate() const {
  if (target.empty()) {
    throw ProviderError("logprob request has an empty target", false);
  }
  if (max_total_tokens < kMinTotalTokens) {
    throw ConfigError(fmt::format("max_total_tokens must be >= {}, got {}",
                                  kMinTotalTokens, max_total_tokens));
  }
}

json LogprobRequest::canonical() const {
  return json{{"kind", "logprob"},
              {"model_id", model_id},
              {"context", normalize_newlines(context)},
              {"target", normalize_newlines(target)},
              {"max_total_tokens", max_total_tokens}};
}

void LogprobResponse::validate() const {
  for (double value : target_token_logprobs) {
    if (!std::isfinite(value) || value > 0.0) {
      throw ProviderError(
          fmt::format("provider returned an invalid logprob {}", value), false);
    }
  }
}

void ChatRequest::validate() const {
  if (user_prompt.empty()) {
    throw ProviderError("chat request has an empty user prompt", false);
  }
  if (temperature < 0.0) {
    throw ConfigError("chat temperature must be >= 0");
  }
}

json ChatRequest::canonical() const {
  return json{{"kind", "chat"},
              {"model_id", model_id},
              {"system_prompt", normalize_newlines(system_prompt)},
              {"user_prompt", normalize_newlines(user_prompt)},
              {"temperature", temperature},
              {"max_output_tokens", max_output_tokens},
              {"regeneration", regeneration}};
}

void EmbeddingRequest::validate() const {
  if (text.empty()) {
    throw ProviderError("embedding request has empty text", false);
  }
}

json EmbeddingRequest::canonical() const {
  return json{{"kind", "embedding"},
              {"model_id", model_id},
              {"text", normalize_newlines(text)}};
}

std::string cache_key(const LogprobRequest& request) {
  return sha256_hex(dump_line(request.canonical()));
}

std::string cache_key(const ChatRequest& request) {
  return sha256_hex(dump_line(request.canonical()));
}

std::string cache_key(const EmbeddingRequest& request) {
  return sha256_hex(dump_line(request.canonical()));
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size() || a.empty()) {
    throw ProviderError("cosine of embeddings with mismatched dimensions", false);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void normalize_in_place(Embedding& vector) {
  double norm = 0.0;
  for (double v : vector) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0 || !std::isfinite(norm)) {
    throw ProviderError("embedding has zero or non-finite norm", false);
  }
  for (double& v : vector) v /= norm;
}

RetryPolicy RetryPolicy::no_wait(int attempts) {
  RetryPolicy policy;
  policy.max_attempts = attempts;
  policy.initial_backoff = std::chrono::milliseconds{0};
  policy.sleep = [](std::chrono::milliseconds) {};
  return policy;
}

namespace detail {

std::chrono::milliseconds jittered(std::chrono::milliseconds base,
                                   double jitter) {
  if (base.count() <= 0 || jitter <= 0.0) return base;
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uniform_real_distribution<double> spread(1.0 - jitter, 1.0 + jitter);
  return std::chrono::milliseconds{
      static_cast<long long>(static_cast<double>(base.count()) * spread(rng))};
}

}  // namespace detail

ResponseCache::ResponseCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {}

std::filesystem::path ResponseCache::entry_path(const std::string& key) const {
  return directory_ / (key + ".json");
}

std::optional<json> ResponseCache::lookup(const std::string& key,
                                          const json& request) const {
  auto path = entry_path(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  json entry;
  try {
    entry = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw CacheCorruptionError(
        fmt::format("cache entry {} is unreadable: {}", path.string(), e.what()));
  }
  if (!entry.is_object() || !entry.contains("request") ||
      !entry.contains("response")) {
    throw CacheCorruptionError(
        fmt::format("cache entry {} is missing fields", path.string()));
  }
  if (entry["request"] != request) {
    throw CacheCorruptionError(fmt::format(
        "cache entry {} holds a different request", path.string()));
  }
  return entry["response"];
}

void ResponseCache::store(const std::string& key, const json& request,
                          const json& response, int attempt_count) const {
  json entry{{"request", request},
             {"response", response},
             {"timestamp", utc_timestamp()},
             {"attempt_count", attempt_count}};
  write_text_file(entry_path(key), entry.dump(2, ' ', false,
                                              json::error_handler_t::replace));
}

double CacheCounters::hit_fraction() const {
  const double total = static_cast<double>(hits.load() + misses.load());
  return total == 0.0 ? 1.0 : static_cast<double>(hits.load()) / total;
}

namespace {

// Shared lookup-or-call flow for the three cached providers.
template <typename Response, typename Call, typename Encode, typename Decode>
Response cached_call(const CacheOptions& options, const json& request,
                     Call&& call, Encode&& encode, Decode&& decode) {
  std::string key;
  if (options.cache) {
    key = sha256_hex(dump_line(request));
    if (auto hit = options.cache->lookup(key, request)) {
      ++options.counters->hits;
      try {
        return decode(*hit);
      } catch (const json::exception& e) {
        throw CacheCorruptionError(fmt::format(
            "cache entry {} has a malformed response: {}", key, e.what()));
      }
    }
  }
  ++options.counters->misses;
  if (options.offline) {
    throw ProviderError("cache miss while offline", false);
  }
  int attempts = 0;
  Response response = call_with_retries(options.retry, call, &attempts);
  if (options.cache) options.cache->store(key, request, encode(response), attempts);
  return response;
}

}  // namespace

json to_json_value(const LogprobResponse& response) {
  return json{{"target_token_logprobs", response.target_token_logprobs},
              {"truncated", response.truncated}};
}

LogprobResponse logprob_response_from_json(const json& j) {
  LogprobResponse response;
  response.target_token_logprobs =
      j.at("target_token_logprobs").get<std::vector<double>>();
  response.truncated = j.value("truncated", false);
  return response;
}

CachedLogprobProvider::CachedLogprobProvider(
    std::shared_ptr<const LogprobProvider> inner, CacheOptions options)
    : inner_(std::move(inner)), options_(std::move(options)) {}

LogprobResponse CachedLogprobProvider::score_logprobs(
    const LogprobRequest& request) const {
  request.validate();
  auto response = cached_call<LogprobResponse>(
      options_, request.canonical(),
      [&] { return inner_->score_logprobs(request); }, to_json_value,
      logprob_response_from_json);
  response.validate();
  return response;
}

CachedChatProvider::CachedChatProvider(std::shared_ptr<const ChatProvider> inner,
                                       CacheOptions options)
    : inner_(std::move(inner)), options_(std::move(options)) {}

std::string CachedChatProvider::chat_complete(const ChatRequest& request) const {
  request.validate();
  return cached_call<std::string>(
      options_, request.canonical(),
      [&] { return inner_->chat_complete(request); },
      [](const std::string& text) { return json{{"text", text}}; },
      [](const json& j) { return j.at("text").get<std::string>(); });
}

CachedEmbeddingProvider::CachedEmbeddingProvider(
    std::shared_ptr<const EmbeddingProvider> inner, CacheOptions options)
    : inner_(std::move(inner)), options_(std::move(options)) {}

Embedding CachedEmbeddingProvider::embed(const EmbeddingRequest& request) const {
  request.validate();
  auto vector = cached_call<Embedding>(
      options_, request.canonical(), [&] { return inner_->embed(request); },
      [](const Embedding& v) { return json{{"embedding", v}}; },
      [](const json& j) { return j.at("embedding").get<Embedding>(); });
  std::lock_guard lock(dimension_mutex_);
  if (!dimension_) {
    dimension_ = vector.size();
  } else if (*dimension_ != vector.size()) {
    throw ProviderError(fmt::format("embedding dimension changed from {} to {}",
                                    *dimension_, vector.size()),
                        false);
  }
  return vector;
}

}  // namespace srecycle
