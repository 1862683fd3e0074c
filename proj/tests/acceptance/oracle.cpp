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

#include "oracle.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace oracle {

namespace {

// Student-side framing, restated here rather than shared with the library.
const std::string kConditionalPrefix =
    "A chat between a curious user and an artificial intelligence assistant. "
    "The assistant gives helpful, detailed, and polite answers to the user's "
    "questions. USER: ";
const std::string kConditionalSuffix = " ASSISTANT:";
const std::string kReversePrefix = "Below is a response. Guess the instruction.\n\nResponse:\n";
const std::string kReverseSuffix = "\n\nInstruction:";

std::map<std::string, double> number_map(const nlohmann::json& j, const char* key) {
  std::map<std::string, double> out;
  if (j.contains(key)) {
    for (auto it = j.at(key).begin(); it != j.at(key).end(); ++it) {
      out[it.key()] = it.value().get<double>();
    }
  }
  return out;
}

std::vector<std::string> words(const Table& table, const std::string& text) {
  std::istringstream stream(text);
  std::vector<std::string> out;
  std::string word;
  while (stream >> word) {
    if (std::find(table.ignored.begin(), table.ignored.end(), word) == table.ignored.end()) {
      out.push_back(word);
    }
  }
  return out;
}

double token_logprob(const Table& table, const std::string& token,
                     const std::string* context) {
  if (context) {
    for (const auto& rule : table.rules) {
      if (context->find(rule.needle) == std::string::npos) continue;
      auto hit = rule.logprobs.find(token);
      if (hit != rule.logprobs.end()) return hit->second;
      if (rule.fallback) return *rule.fallback;
      break;
    }
    auto hit = table.conditional.find(token);
    if (hit != table.conditional.end()) return hit->second;
    if (table.conditional_default) return *table.conditional_default;
  }
  auto hit = table.unconditional.find(token);
  return hit != table.unconditional.end() ? hit->second : table.unconditional_default;
}

// Mean negative log-likelihood of `target`, optionally given `context`.
double loss(const Table& table, const std::string& target, const std::string* context) {
  const bool has_context = context && !words(table, *context).empty();
  long double sum = 0.0L;
  const auto tokens = words(table, target);
  for (const auto& token : tokens) {
    sum += token_logprob(table, token, has_context ? context : nullptr);
  }
  return static_cast<double>(-sum / static_cast<long double>(tokens.size()));
}

std::string effective(const std::string& instruction, const std::string& input) {
  bool blank = std::all_of(input.begin(), input.end(),
                           [](unsigned char c) { return std::isspace(c) != 0; });
  return blank ? instruction : instruction + "\n\n" + input;
}

}  // namespace

Table Table::from_fixture(const nlohmann::json& fixture) {
  const nlohmann::json& j = fixture.at("logprobs");
  Table t;
  t.unconditional = number_map(j, "unconditional");
  t.unconditional_default = j.value("unconditional_default", -1.0);
  t.conditional = number_map(j, "conditional");
  if (j.contains("conditional_default") && !j["conditional_default"].is_null()) {
    t.conditional_default = j["conditional_default"].get<double>();
  }
  for (const auto& r : j.value("rules", nlohmann::json::array())) {
    Rule rule;
    rule.needle = r.at("context_contains").get<std::string>();
    rule.logprobs = number_map(r, "logprobs");
    if (r.contains("default") && !r["default"].is_null()) {
      rule.fallback = r["default"].get<double>();
    }
    t.rules.push_back(std::move(rule));
  }
  t.ignored = j.value("ignored_tokens", std::vector<std::string>{});
  return t;
}

double ifd(const Table& table, const std::string& instruction, const std::string& input,
           const std::string& response) {
  const std::string context =
      kConditionalPrefix + effective(instruction, input) + kConditionalSuffix;
  return std::exp(loss(table, response, &context) - loss(table, response, nullptr));
}

double rifd(const Table& table, const std::string& instruction, const std::string& input,
            const std::string& response) {
  const std::string context = kReversePrefix + response + kReverseSuffix;
  const std::string target = effective(instruction, input);
  return std::exp(loss(table, target, &context) - loss(table, target, nullptr));
}

int adjudicate(double a1, double b1, double a2, double b2) {
  enum Side { kSuperior, kParity, kInferior };
  auto side = [](double a, double b) { return a > b ? kSuperior : (a < b ? kInferior : kParity); };
  // rows: order 1, columns: order 2
  static constexpr int kTable[3][3] = {
      /* superior */ {+1, +1, 0},
      /* parity   */ {+1, 0, -1},
      /* inferior */ {0, -1, -1},
  };
  return kTable[side(a1, b1)][side(a2, b2)];
}

std::string trim(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return text.substr(begin, end - begin);
}

std::array<std::string, 10> rig_outcomes() {
  return {"BothModified",
          "BothModified",
          "BothModified",
          "BothModified",
          "InstructionOnlyModified_Discarded",
          "ReflectionFailed_Discarded",
          "ResponseOnlyModified",
          "ResponseOnlyModified",
          "ResponseOnlyModified",
          "NoneModified_Discarded"};
}

}  // namespace oracle
