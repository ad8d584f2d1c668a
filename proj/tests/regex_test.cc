// Copyright 2026 The Agent Warden Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "agent_warden/regex.h"

#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "agent_warden/error.h"

namespace agent_warden {
namespace {

TEST(PortableRegexTest, Basics) {
  EXPECT_TRUE(PortableRegex::Compile("^daughter_42$").Search("daughter_42"));
  EXPECT_FALSE(PortableRegex::Compile("^daughter_42$").Search("attacker_7"));
  EXPECT_TRUE(PortableRegex::Compile("acc[a-z]+@").Search("to accountant@firm"));
  EXPECT_TRUE(PortableRegex::Compile("\\.com$").Search("a.com"));
  EXPECT_FALSE(PortableRegex::Compile("\\.com$").Search("acom"));
  EXPECT_TRUE(PortableRegex::Compile("[^0-9]").Search("12a"));
  EXPECT_TRUE(PortableRegex::Compile("").Search(""));
}

TEST(PortableRegexTest, RejectsOutsideSubset) {
  for (const char* bad : {"(", "a)", "[abc", "a{2}", "\\d", "(?=a)", "*a", "\\1"}) {
    try {
      PortableRegex::Compile(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBadRegex) << bad;
    }
  }
}

TEST(PortableRegexTest, LinearOnPathologicalPattern) {
  std::string text(5000, 'a');
  EXPECT_FALSE(PortableRegex::Compile("(a*)*b").Search(text));
}

// Random patterns of the supported subset agree with std::regex.
std::string RandomPattern(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> d(0, 9);
  std::string out;
  int atoms = 1 + d(rng) % 3;
  for (int i = 0; i < atoms; ++i) {
    int k = d(rng);
    std::string atom;
    if (k < 4) {
      atom = std::string(1, "abc"[d(rng) % 3]);
    } else if (k == 4) {
      atom = ".";
    } else if (k == 5) {
      atom = d(rng) % 2 ? "[ab]" : "[^a]";
    } else if (k == 6 && depth > 0) {
      atom = "(" + RandomPattern(rng, depth - 1) + "|" + RandomPattern(rng, depth - 1) + ")";
    } else {
      atom = "b";
    }
    int q = d(rng);
    if (q == 0) atom += "*";
    if (q == 1) atom += "+";
    if (q == 2) atom += "?";
    out += atom;
  }
  if (d(rng) == 0) out = "^" + out;
  if (d(rng) == 0) out += "$";
  return out;
}

TEST(PortableRegexTest, AgreesWithStdRegex) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(0, 8), ch(0, 3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string pattern = RandomPattern(rng, 2);
    PortableRegex mine = PortableRegex::Compile(pattern);
    std::regex reference(pattern, std::regex::ECMAScript);
    for (int t = 0; t < 5; ++t) {
      std::string text;
      for (int i = len(rng); i > 0; --i) text += "abcx"[ch(rng)];
      EXPECT_EQ(mine.Search(text), std::regex_search(text, reference))
          << pattern << " on '" << text << "'";
    }
  }
}

}  // namespace
}  // namespace agent_warden
