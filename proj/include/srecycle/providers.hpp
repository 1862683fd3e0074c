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
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "srecycle/errors.hpp"

namespace srecycle {

inline constexpr int kMinTotalTokens = 16;
inline constexpr int kDefaultTotalTokens = 2048;

// Score `target` as a continuation of `context`. An empty context means the
// target is scored from the start of the sequence.
struct LogprobRequest {
  std::string model_id;
  std::string context;
  std::string target;
  int max_total_tokens = kDefaultTotalTokens;

  void validate() const;
  nlohmann::json canonical() const;
};

struct LogprobResponse {
  std::vector<double> target_token_logprobs;  // nats, each <= 0
  bool truncated = false;

  int target_token_count() const {
    return static_cast<int>(target_token_logprobs.size());
  }
  // Throws ProviderError on a non-finite or positive entry.
  void validate() const;

  friend bool operator==(const LogprobResponse&,
                         const LogprobResponse&) = default;
};

struct ChatRequest {
  std::string model_id;
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 1.0;
  int max_output_tokens = 2048;
  // Distinguishes deliberate re-generations of the same prompt in the cache;
  // never sent to the service.
  int regeneration = 0;

  void validate() const;
  nlohmann::json canonical() const;
};

struct EmbeddingRequest {
  std::string model_id;
  std::string text;

  void validate() const;
  nlohmann::json canonical() const;
};

using Embedding = std::vector<double>;

// Providers are called concurrently from pipeline workers; implementations
// must be thread-safe.
class LogprobProvider {
 public:
  virtual ~LogprobProvider() = default;
  virtual LogprobResponse score_logprobs(const LogprobRequest& request) const = 0;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string chat_complete(const ChatRequest& request) const = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Embedding embed(const EmbeddingRequest& request) const = 0;
};

// Content address of a request: SHA-256 of its canonical serialization.
// Prompts are newline-normalized; no other whitespace is collapsed.
std::string cache_key(const LogprobRequest& request);
std::string cache_key(const ChatRequest& request);
std::string cache_key(const EmbeddingRequest& request);

double cosine_similarity(const Embedding& a, const Embedding& b);
void normalize_in_place(Embedding& vector);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{1000};
  double jitter = 0.25;  // +/- fraction applied to each delay
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleep_for

  static RetryPolicy no_wait(int attempts = 5);
};

// Runs `call` until it succeeds, a non-retryable ProviderError escapes, or
// attempts are exhausted. Returns the attempt count through `attempts`.
template <typename Fn>
auto call_with_retries(const RetryPolicy& policy, Fn&& call, int* attempts);

// On-disk store of provider responses: one JSON file per cache key holding
// {request, response, timestamp, attempt_count}.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path directory);

  const std::filesystem::path& directory() const { return directory_; }

  // Throws CacheCorruptionError when the entry exists but is unreadable or
  // its stored request differs from `request`.
  std::optional<nlohmann::json> lookup(const std::string& key,
                                       const nlohmann::json& request) const;

  void store(const std::string& key, const nlohmann::json& request,
             const nlohmann::json& response, int attempt_count) const;

  std::filesystem::path entry_path(const std::string& key) const;

 private:
  std::filesystem::path directory_;
};

struct CacheCounters {
  std::atomic<std::size_t> hits{0};
  std::atomic<std::size_t> misses{0};

  double hit_fraction() const;
};

struct CacheOptions {
  std::shared_ptr<const ResponseCache> cache;  // may be null: retry only
  RetryPolicy retry;
  bool offline = false;  // a miss becomes a ProviderError instead of a call
  std::shared_ptr<CacheCounters> counters = std::make_shared<CacheCounters>();
};

class CachedLogprobProvider final : public LogprobProvider {
 public:
  CachedLogprobProvider(std::shared_ptr<const LogprobProvider> inner,
                        CacheOptions options);
  LogprobResponse score_logprobs(const LogprobRequest& request) const override;
  const CacheCounters& counters() const { return *options_.counters; }

 private:
  std::shared_ptr<const LogprobProvider> inner_;
  CacheOptions options_;
};

class CachedChatProvider final : public ChatProvider {
 public:
  CachedChatProvider(std::shared_ptr<const ChatProvider> inner,
                     CacheOptions options);
  std::string chat_complete(const ChatRequest& request) const override;
  const CacheCounters& counters() const { return *options_.counters; }

 private:
  std::shared_ptr<const ChatProvider> inner_;
  CacheOptions options_;
};

// Also enforces a fixed embedding dimension across calls.
class CachedEmbeddingProvider final : public EmbeddingProvider {
 public:
  CachedEmbeddingProvider(std::shared_ptr<const EmbeddingProvider> inner,
                          CacheOptions options);
  Embedding embed(const EmbeddingRequest& request) const override;
  const CacheCounters& counters() const { return *options_.counters; }

 private:
  std::shared_ptr<const EmbeddingProvider> inner_;
  CacheOptions options_;
  mutable std::mutex dimension_mutex_;
  mutable std::optional<std::size_t> dimension_;
};

nlohmann::json to_json_value(const LogprobResponse& response);
LogprobResponse logprob_response_from_json(const nlohmann::json& j);

namespace detail {
std::chrono::milliseconds jittered(std::chrono::milliseconds base, double jitter);
}  // namespace detail

template <typename Fn>
auto call_with_retries(const RetryPolicy& policy, Fn&& call, int* attempts) {
  auto delay = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    if (attempts) *attempts = attempt;
    try {
      return call();
    } catch (const ProviderError& e) {
      if (!e.retryable() || attempt >= policy.max_attempts) throw;
    }
    auto wait = detail::jittered(delay, policy.jitter);
    if (policy.sleep) {
      policy.sleep(wait);
    } else {
      std::this_thread::sleep_for(wait);
    }
    delay *= 2;
  }
}

}  // namespace srecycle
