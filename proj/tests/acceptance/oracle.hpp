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

// Reference values and brute-force recomputations used by the acceptance
// suite. Nothing here calls into the library under test.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace oracle {

// A logprob table read straight from fixture JSON.
struct Table {
  std::map<std::string, double> unconditional;
  double unconditional_default = -1.0;
  std::map<std::string, double> conditional;
  std::optional<double> conditional_default;
  struct Rule {
    std::string needle;
    std::map<std::string, double> logprobs;
    std::optional<double> fallback;
  };
  std::vector<Rule> rules;
  std::vector<std::string> ignored;

  static Table from_fixture(const nlohmann::json& fixture);
};

// Brute-force IFD and r-IFD: wrap, split on whitespace, look every token up,
// sum, average and exponentiate. No truncation: callers keep samples short.
double ifd(const Table& table, const std::string& instruction, const std::string& input,
           const std::string& response);
double rifd(const Table& table, const std::string& instruction, const std::string& input,
            const std::string& response);

// Printed subset sizes for the 46,325-sample pool.
inline constexpr std::size_t kPoolSize = 46325;
struct SubsetRow {
  double k_percent;
  std::size_t printed;
};
inline constexpr std::array<SubsetRow, 8> kPrintedSubsets{{{1, 463},
                                                           {2, 926},
                                                           {3, 1390},
                                                           {5, 2316},
                                                           {10, 4632},
                                                           {30, 13897},
                                                           {50, 23163},
                                                           {70, 32428}}};

// Printed win rates with their win/tie/lose counts.
struct WinRateRow {
  std::size_t wins, ties, losses;
  double printed;
};
inline constexpr std::array<WinRateRow, 4> kPrintedWinRates{{{150, 40, 28, 1.560},
                                                             {143, 51, 24, 1.546},
                                                             {738, 126, 166, 1.556},
                                                             {688, 196, 146, 1.548}}};
inline constexpr double kWinRateTolerance = 0.0005;

// Dual-order adjudication written as the literal outcome table.
// Returns +1 win, 0 tie, -1 lose for scores (a1,b1) and (a2,b2).
int adjudicate(double a1, double b1, double a2, double b2);

// Quoted rule cases: superior+parity wins, superior+inferior ties,
// parity+inferior loses.
struct RuleCase {
  double a1, b1, a2, b2;
  int expected;
};
inline constexpr std::array<RuleCase, 3> kQuotedRuleCases{{{8, 5, 6, 6, +1},
                                                           {8, 6, 6, 8, 0},
                                                           {6, 6, 5, 7, -1}}};

// Boundary whitespace trim (isspace set).
std::string trim(const std::string& text);

// Outcome names per toy10 sample under rig_fixture.json, derived by hand:
// phase-1 IFD of every original is exp(-1); candidates 0-5 score exp(-0.5),
// 6 ties at exp(-1), 7-8 drop to exp(-1.5), 9 never parses. Phase-2 r-IFD of
// every kept pair is exp(-1); reflections 0-3 and 6-8 reach exp(-2), 4 ties,
// 5 never parses, 9 rises to exp(-0.5).
std::array<std::string, 10> rig_outcomes();

}  // namespace oracle
