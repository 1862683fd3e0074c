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

#include <string>
#include <string_view>

namespace srecycle {

// Rewrites CRLF and lone CR line endings to LF. No other whitespace changes.
std::string normalize_newlines(std::string_view text);

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

bool is_blank(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace srecycle
