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
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "srecycle/providers.hpp"

namespace srecycle::testing {

std::filesystem::path data_path(const std::string& name);

// A fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  ScratchDir();
  ~ScratchDir();
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& text);

// Map of relative path -> bytes for every regular file under `root`.
std::map<std::string, std::string> snapshot(const std::filesystem::path& root);

// Chat provider that records every request and forwards to `inner`.
class RecordingChat final : public ChatProvider {
 public:
  explicit RecordingChat(const ChatProvider& inner) : inner_(inner) {}
  std::string chat_complete(const ChatRequest& request) const override;

  std::vector<ChatRequest> requests() const;

 private:
  const ChatProvider& inner_;
  mutable std::mutex mutex_;
  mutable std::vector<ChatRequest> requests_;
};

class CountingLogprobs final : public LogprobProvider {
 public:
  explicit CountingLogprobs(const LogprobProvider& inner) : inner_(inner) {}
  LogprobResponse score_logprobs(const LogprobRequest& request) const override {
    ++calls;
    return inner_.score_logprobs(request);
  }
  mutable std::atomic<int> calls{0};

 private:
  const LogprobProvider& inner_;
};

}  // namespace srecycle::testing
