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

#include "srecycle/datamodel.hpp"
#include "srecycle/errors.hpp"
#include "srecycle/mock_providers.hpp"
#include "srecycle/providers.hpp"
#include "test_support.hpp"

namespace srecycle {
namespace {

using nlohmann::json;
using testing::ScratchDir;

class FlakyLogprobs final : public LogprobProvider {
 public:
  explicit FlakyLogprobs(int failures, bool retryable = true)
      : failures_(failures), retryable_(retryable) {}
  LogprobResponse score_logprobs(const LogprobRequest&) const override {
    ++calls;
    if (calls <= failures_) throw ProviderError("connection reset", retryable_);
    return LogprobResponse{{-0.5, -1.5}, false};
  }
  mutable int calls = 0;

 private:
  int failures_;
  bool retryable_;
};

LogprobRequest request(std::string context = "ctx", std::string target = "a b") {
  return LogprobRequest{"m", std::move(context), std::move(target), 2048};
}

CacheOptions options_in(const ScratchDir& dir) {
  CacheOptions options;
  options.cache = std::make_shared<const ResponseCache>(dir / "cache");
  options.retry = RetryPolicy::no_wait();
  return options;
}

TEST(Requests, ValidateContracts) {
  EXPECT_THROW(request("c", "").validate(), ProviderError);
  LogprobRequest small = request();
  small.max_total_tokens = 8;
  EXPECT_THROW(small.validate(), ConfigError);
  EXPECT_THROW((ChatRequest{"m", "s", "", 1.0, 10, 0}.validate()), ProviderError);
  EXPECT_THROW((LogprobResponse{{0.5}, false}.validate()), ProviderError);
  EXPECT_THROW((LogprobResponse{{NAN}, false}.validate()), ProviderError);
  EXPECT_NO_THROW((LogprobResponse{{0.0, -2.0}, false}.validate()));
}

TEST(CacheKey, SensitiveToEveryField) {
  const auto base = cache_key(request());
  EXPECT_EQ(base, cache_key(request()));
  EXPECT_NE(base, cache_key(request("ctx2")));
  EXPECT_NE(base, cache_key(request("ctx", "a  b")));
  EXPECT_EQ(cache_key(request("x\r\ny")), cache_key(request("x\ny")));
  ChatRequest chat{"m", "s", "u", 1.0, 10, 0};
  ChatRequest regenerated = chat;
  regenerated.regeneration = 1;
  EXPECT_NE(cache_key(chat), cache_key(regenerated));
  EXPECT_NE(cache_key(EmbeddingRequest{"m", "u"}), cache_key(chat));
}

TEST(Retry, RetriesTransientFailures) {
  auto inner = std::make_shared<FlakyLogprobs>(2);
  CachedLogprobProvider provider(inner, CacheOptions{nullptr, RetryPolicy::no_wait(5)});
  EXPECT_EQ(provider.score_logprobs(request()).target_token_count(), 2);
  EXPECT_EQ(inner->calls, 3);
}

TEST(Retry, GivesUpAfterMaxAttempts) {
  auto inner = std::make_shared<FlakyLogprobs>(10);
  CachedLogprobProvider provider(inner, CacheOptions{nullptr, RetryPolicy::no_wait(3)});
  EXPECT_THROW(provider.score_logprobs(request()), ProviderError);
  EXPECT_EQ(inner->calls, 3);
}

TEST(Retry, NonRetryableFailsFast) {
  auto inner = std::make_shared<FlakyLogprobs>(10, false);
  CachedLogprobProvider provider(inner, CacheOptions{nullptr, RetryPolicy::no_wait(5)});
  EXPECT_THROW(provider.score_logprobs(request()), ProviderError);
  EXPECT_EQ(inner->calls, 1);
}

TEST(Retry, BackoffDoublesWithinJitter) {
  std::vector<long long> waits;
  RetryPolicy policy;
  policy.max_attempts = 4;
  policy.initial_backoff = std::chrono::milliseconds(100);
  policy.jitter = 0.25;
  policy.sleep = [&](std::chrono::milliseconds d) { waits.push_back(d.count()); };
  int attempts = 0;
  EXPECT_THROW(call_with_retries(
                   policy, []() -> int { throw ProviderError("down", true); }, &attempts),
               ProviderError);
  EXPECT_EQ(attempts, 4);
  ASSERT_EQ(waits.size(), 3u);
  for (std::size_t i = 0; i < waits.size(); ++i) {
    const double base = 100.0 * std::pow(2.0, static_cast<double>(i));
    EXPECT_GE(waits[i], static_cast<long long>(base * 0.75) - 1);
    EXPECT_LE(waits[i], static_cast<long long>(base * 1.25) + 1);
  }
}

TEST(Cache, SecondCallIsAHit) {
  ScratchDir dir;
  auto inner = std::make_shared<FlakyLogprobs>(0);
  auto options = options_in(dir);
  CachedLogprobProvider provider(inner, options);
  auto first = provider.score_logprobs(request());
  auto second = provider.score_logprobs(request());
  EXPECT_EQ(first, second);
  EXPECT_EQ(inner->calls, 1);
  EXPECT_EQ(options.counters->hits.load(), 1u);
  EXPECT_EQ(options.counters->misses.load(), 1u);
  EXPECT_DOUBLE_EQ(options.counters->hit_fraction(), 0.5);

  const json entry = json::parse(read_text_file(
      options.cache->entry_path(cache_key(request()))));
  EXPECT_EQ(entry["attempt_count"], 1);
  EXPECT_TRUE(entry.contains("timestamp"));
  EXPECT_EQ(entry["request"], request().canonical());
}

TEST(Cache, SurvivesProviderRecreation) {
  ScratchDir dir;
  auto inner = std::make_shared<FlakyLogprobs>(0);
  CachedLogprobProvider(inner, options_in(dir)).score_logprobs(request());
  auto offline = options_in(dir);
  offline.offline = true;
  CachedLogprobProvider replay(std::make_shared<FlakyLogprobs>(100), offline);
  EXPECT_EQ(replay.score_logprobs(request()).target_token_count(), 2);
  EXPECT_THROW(replay.score_logprobs(request("other")), ProviderError);
}

TEST(Cache, CorruptEntryIsReported) {
  ScratchDir dir;
  auto options = options_in(dir);
  CachedLogprobProvider provider(std::make_shared<FlakyLogprobs>(0), options);
  provider.score_logprobs(request());
  const auto path = options.cache->entry_path(cache_key(request()));
  write_text_file(path, "{not json");
  EXPECT_THROW(provider.score_logprobs(request()), CacheCorruptionError);

  json wrong{{"request", request("different").canonical()},
             {"response", {{"target_token_logprobs", {-1.0}}}}};
  write_text_file(path, wrong.dump());
  EXPECT_THROW(provider.score_logprobs(request()), CacheCorruptionError);
}

TEST(Cache, ChatRegenerationsAreDistinct) {
  ScratchDir dir;
  auto scripted = std::make_shared<ScriptedChatModel>(
      ScriptedChatModel({{{}, {"first", "second"}}}));
  CachedChatProvider chat(scripted, options_in(dir));
  ChatRequest r{"m", "s", "u", 1.0, 100, 0};
  EXPECT_EQ(chat.chat_complete(r), "first");
  r.regeneration = 1;
  EXPECT_EQ(chat.chat_complete(r), "second");
  r.regeneration = 7;
  EXPECT_EQ(chat.chat_complete(r), "second");
}

TEST(Embeddings, CosineAndNormalization) {
  Embedding v{3.0, 4.0};
  normalize_in_place(v);
  EXPECT_DOUBLE_EQ(v[0], 0.6);
  EXPECT_DOUBLE_EQ(cosine_similarity({1, 0}, {0, 1}), 0.0);
  EXPECT_NEAR(cosine_similarity({1, 1}, {2, 2}), 1.0, 1e-15);
  EXPECT_THROW(cosine_similarity({1}, {1, 2}), ProviderError);
}

TEST(Embeddings, HashingModelIsDeterministicAndUnitLength) {
  HashingEmbeddingModel model(32);
  auto a = model.embed({"m", "The cat sat."});
  auto b = model.embed({"m", "the CAT sat"});
  EXPECT_EQ(a, b);
  double norm = 0;
  for (double x : a) norm += x * x;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_EQ(a.size(), 32u);
}

class ResizingEmbedder final : public EmbeddingProvider {
 public:
  Embedding embed(const EmbeddingRequest& r) const override {
    return Embedding(r.text.size(), 1.0);
  }
};

TEST(Embeddings, DimensionMustStayFixed) {
  CachedEmbeddingProvider provider(std::make_shared<ResizingEmbedder>(),
                                   CacheOptions{nullptr, RetryPolicy::no_wait()});
  provider.embed({"m", "abc"});
  EXPECT_THROW(provider.embed({"m", "abcd"}), ProviderError);
}

TEST(MockTable, LookupOrder) {
  LogprobTable table;
  table.unconditional = {{"a", -1.0}};
  table.unconditional_default = -5.0;
  table.conditional = {{"a", -0.5}};
  table.conditional_default = -4.0;
  table.rules = {{"magic", {{"a", -0.1}}, -0.2}};
  EXPECT_DOUBLE_EQ(table.lookup("a", false, ""), -1.0);
  EXPECT_DOUBLE_EQ(table.lookup("b", false, ""), -5.0);
  EXPECT_DOUBLE_EQ(table.lookup("a", true, "plain"), -0.5);
  EXPECT_DOUBLE_EQ(table.lookup("b", true, "plain"), -4.0);
  EXPECT_DOUBLE_EQ(table.lookup("a", true, "a magic word"), -0.1);
  EXPECT_DOUBLE_EQ(table.lookup("b", true, "a magic word"), -0.2);
  EXPECT_FALSE(table.context_free());
  EXPECT_TRUE(LogprobTable::constant(-2.0).context_free());
}

TEST(MockTable, JsonRoundTrip) {
  LogprobTable table;
  table.unconditional = {{"x", -1.25}};
  table.conditional_default = -0.75;
  table.rules = {{"ctx", {{"y", -0.5}}, std::nullopt}};
  table.ignored_tokens = {"<s>"};
  const auto again = LogprobTable::from_json(table.to_json());
  EXPECT_EQ(again.to_json(), table.to_json());
}

TEST(MockModel, OneLogprobPerTargetToken) {
  TableLogprobModel model(LogprobTable::constant(-2.0));
  auto response = model.score_logprobs(request("some context", "one two three"));
  EXPECT_EQ(response.target_token_count(), 3);
  EXPECT_FALSE(response.truncated);
  EXPECT_THROW(model.score_logprobs(request("c", "   \n")), ProviderError);
}

TEST(MockModel, TruncatesContextFromTheLeft) {
  LogprobTable table = LogprobTable::constant(-1.0);
  table.rules = {{"keep", {}, -0.25}};
  TableLogprobModel model(table);
  std::string context = "keep";
  for (int i = 0; i < 20; ++i) context += " filler";
  auto fits = model.score_logprobs({"m", context, "t1 t2", 100});
  EXPECT_FALSE(fits.truncated);
  EXPECT_DOUBLE_EQ(fits.target_token_logprobs[0], -0.25);
  auto cut = model.score_logprobs({"m", context, "t1 t2", 16});
  EXPECT_TRUE(cut.truncated);
  EXPECT_EQ(cut.target_token_count(), 2);
  EXPECT_DOUBLE_EQ(cut.target_token_logprobs[0], -1.0);  // "keep" fell off the left
}

TEST(MockModel, TruncatesLongTargetFromTheRight) {
  TableLogprobModel model(LogprobTable::constant(-1.0));
  std::string target;
  for (int i = 0; i < 20; ++i) target += "w" + std::to_string(i) + " ";
  auto response = model.score_logprobs({"m", "ctx", target, 16});
  EXPECT_TRUE(response.truncated);
  EXPECT_EQ(response.target_token_count(), 16);
}

TEST(MockModel, IgnoredTokensCanEmptyTheTarget) {
  LogprobTable table = LogprobTable::constant(-1.0);
  table.ignored_tokens = {"<pad>"};
  TableLogprobModel model(table);
  EXPECT_THROW(model.score_logprobs(request("c", "<pad> <pad>")), EmptyTargetError);
}

TEST(MockChat, FirstMatchingReplyWins) {
  ScriptedChatModel chat({{{"alpha"}, {"A"}}, {{"alpha", "beta"}, {"AB"}}}, {"none"});
  EXPECT_EQ(chat.chat_complete({"m", "", "alpha beta", 1, 100, 0}), "A");
  EXPECT_EQ(chat.chat_complete({"m", "beta", "x", 1, 100, 0}), "none");
}

TEST(MockChat, OutputTokenLimitTruncates) {
  auto chat = ScriptedChatModel::always("one two three four");
  EXPECT_EQ(chat.chat_complete({"m", "", "u", 1, 2, 0}),
            std::string("one two") + std::string(kTruncationMarker));
  EXPECT_EQ(chat.chat_complete({"m", "", "u", 1, 4, 0}), "one two three four");
}

TEST(MockFixture, LoadsTheRig) {
  auto fixture = MockFixture::load(testing::data_path("rig_fixture.json"));
  EXPECT_EQ(fixture.embedding_dim, 32u);
  EXPECT_FALSE(fixture.logprobs.rules.empty());
  EXPECT_TRUE(fixture.chat.contains("replies"));
  ScratchDir dir;
  write_text_file(dir / "bad.json", "{");
  EXPECT_THROW(MockFixture::load(dir / "bad.json"), ConfigError);
}

}  // namespace
}  // namespace srecycle
