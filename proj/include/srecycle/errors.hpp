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

#include <stdexcept>
#include <string>

namespace srecycle {

// Process exit codes shared by every subcommand.
enum class ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kProvider = 3,
  kCacheCorruption = 4,
  kInterrupted = 130,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Invalid configuration or command-line usage.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::kConfig, what) {}
};

// Malformed input files or records that violate the dataset schema.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ExitCode::kConfig, what) {}
};

// Failure talking to an external model service. Transport-level failures
// are retryable; contract violations and rejected requests are not.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, bool retryable)
      : Error(ExitCode::kProvider, what), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

// A provider succeeded but the request cannot be scored (for example no
// target tokens survive tokenization). Fatal for that sample only.
class EmptyTargetError : public ProviderError {
 public:
  explicit EmptyTargetError(const std::string& what)
      : ProviderError(what, false) {}
};

class CacheCorruptionError : public Error {
 public:
  explicit CacheCorruptionError(const std::string& what)
      : Error(ExitCode::kCacheCorruption, what) {}
};

}  // namespace srecycle
