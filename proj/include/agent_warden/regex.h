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

#ifndef AGENT_WARDEN_REGEX_H_
#define AGENT_WARDEN_REGEX_H_

#include <bitset>
#include <string>
#include <string_view>
#include <vector>

namespace agent_warden {

// Regular expressions restricted to a portable subset: literals, `.`, `*`,
// `+`, `?`, bracket classes with ranges and negation, `|`, grouping
// parentheses, `^`, `$`, and backslash escapes of punctuation. Backreferences,
// lookaround, bounded repetition and class shorthands are rejected.
//
// Matching is an unanchored search over bytes, run as a Thompson NFA
// simulation, so worst-case time is O(pattern * text).
class PortableRegex {
 public:
  // Throws Error(kBadRegex).
  static PortableRegex Compile(std::string_view pattern);

  bool Search(std::string_view text) const;

  const std::string& pattern() const { return pattern_; }

 private:
  enum class Op { kChar, kAny, kClass, kSplit, kJump, kBegin, kEnd, kMatch };
  struct State {
    Op op = Op::kMatch;
    unsigned char ch = 0;
    int klass = -1;
    int out = -1;
    int out1 = -1;
  };

  friend class RegexCompiler;

  std::string pattern_;
  std::vector<State> states_;
  std::vector<std::bitset<256>> classes_;
  int start_ = -1;
};

}  // namespace agent_warden

#endif  // AGENT_WARDEN_REGEX_H_
