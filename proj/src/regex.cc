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

#include <cctype>

#include "agent_warden/error.h"

namespace agent_warden {

// Recursive-descent parser that emits NFA fragments directly.
class RegexCompiler {
 public:
  explicit RegexCompiler(std::string_view pattern, PortableRegex& re)
      : pattern_(pattern), re_(re) {}

  void Run() {
    Fragment whole = ParseAlternation();
    if (pos_ != pattern_.size()) {
      // Only an unbalanced ')' stops the top-level alternation early.
      Fail("unbalanced ')'");
    }
    int match = Add({PortableRegex::Op::kMatch});
    Patch(whole.dangling, match);
    re_.start_ = whole.start;
  }

 private:
  using State = PortableRegex::State;
  using Op = PortableRegex::Op;

  // A dangling edge: (state index, slot 0 = out, slot 1 = out1).
  struct Edge {
    int state;
    int slot;
  };
  struct Fragment {
    int start;
    std::vector<Edge> dangling;
  };

  [[noreturn]] void Fail(const std::string& why) const {
    throw Error(ErrorCode::kBadRegex, "/" + std::string(pattern_) + "/ at " +
                                          std::to_string(pos_) + ": " + why);
  }

  int Add(State s) {
    re_.states_.push_back(s);
    return static_cast<int>(re_.states_.size()) - 1;
  }

  void Patch(const std::vector<Edge>& edges, int target) {
    for (const Edge& e : edges) {
      if (e.slot == 0) {
        re_.states_[e.state].out = target;
      } else {
        re_.states_[e.state].out1 = target;
      }
    }
  }

  bool AtEnd() const { return pos_ >= pattern_.size(); }
  char Peek() const { return pattern_[pos_]; }

  Fragment Empty() {
    int s = Add({Op::kJump});
    return {s, {{s, 0}}};
  }

  Fragment ParseAlternation() {
    Fragment left = ParseConcatenation();
    while (!AtEnd() && Peek() == '|') {
      ++pos_;
      Fragment right = ParseConcatenation();
      int split = Add({Op::kSplit, 0, -1, left.start, right.start});
      std::vector<Edge> dangling = std::move(left.dangling);
      dangling.insert(dangling.end(), right.dangling.begin(), right.dangling.end());
      left = {split, std::move(dangling)};
    }
    return left;
  }

  Fragment ParseConcatenation() {
    std::vector<Fragment> parts;
    while (!AtEnd() && Peek() != '|' && Peek() != ')') {
      parts.push_back(ParseRepeat());
    }
    if (parts.empty()) return Empty();
    Fragment result = std::move(parts.front());
    for (size_t i = 1; i < parts.size(); ++i) {
      Patch(result.dangling, parts[i].start);
      result.dangling = std::move(parts[i].dangling);
    }
    return result;
  }

  Fragment ParseRepeat() {
    Fragment atom = ParseAtom();
    if (AtEnd()) return atom;
    char q = Peek();
    if (q != '*' && q != '+' && q != '?') return atom;
    ++pos_;
    if (!AtEnd() && (Peek() == '*' || Peek() == '+' || Peek() == '?')) {
      Fail("stacked quantifiers are not portable");
    }
    int split = Add({Op::kSplit, 0, -1, atom.start, -1});
    switch (q) {
      case '*':
        Patch(atom.dangling, split);
        return {split, {{split, 1}}};
      case '+':
        Patch(atom.dangling, split);
        return {atom.start, {{split, 1}}};
      default: {  // '?'
        std::vector<Edge> dangling = std::move(atom.dangling);
        dangling.push_back({split, 1});
        return {split, std::move(dangling)};
      }
    }
  }

  Fragment Single(State s) {
    int idx = Add(s);
    return {idx, {{idx, 0}}};
  }

  Fragment ParseAtom() {
    char c = Peek();
    switch (c) {
      case '*':
      case '+':
      case '?':
        Fail("quantifier without operand");
      case '{':
      case '}':
        Fail("bounded repetition is not in the portable subset");
      case '(': {
        ++pos_;
        if (!AtEnd() && Peek() == '?') Fail("group extensions are not supported");
        Fragment inner = ParseAlternation();
        if (AtEnd() || Peek() != ')') Fail("missing ')'");
        ++pos_;
        return inner;
      }
      case '.':
        ++pos_;
        return Single({Op::kAny});
      case '^':
        ++pos_;
        return Single({Op::kBegin});
      case '$':
        ++pos_;
        return Single({Op::kEnd});
      case '[':
        return ParseClass();
      case '\\': {
        ++pos_;
        if (AtEnd()) Fail("trailing backslash");
        char escaped = Peek();
        if (std::isalnum(static_cast<unsigned char>(escaped))) {
          Fail(std::string("escape \\") + escaped + " is not in the portable subset");
        }
        ++pos_;
        return Single({Op::kChar, static_cast<unsigned char>(escaped)});
      }
      default:
        ++pos_;
        return Single({Op::kChar, static_cast<unsigned char>(c)});
    }
  }

  unsigned char ClassChar() {
    if (AtEnd()) Fail("unterminated '['");
    char c = Peek();
    ++pos_;
    if (c == '\\') {
      if (AtEnd()) Fail("trailing backslash");
      char escaped = Peek();
      if (std::isalnum(static_cast<unsigned char>(escaped))) {
        Fail(std::string("escape \\") + escaped + " is not in the portable subset");
      }
      ++pos_;
      return static_cast<unsigned char>(escaped);
    }
    if (c == '[' && !AtEnd() && (Peek() == ':' || Peek() == '=' || Peek() == '.')) {
      Fail("POSIX bracket expressions are not supported");
    }
    return static_cast<unsigned char>(c);
  }

  Fragment ParseClass() {
    ++pos_;  // '['
    bool negate = false;
    if (!AtEnd() && Peek() == '^') {
      negate = true;
      ++pos_;
    }
    std::bitset<256> set;
    bool first = true;
    while (true) {
      if (AtEnd()) Fail("unterminated '['");
      if (Peek() == ']' && !first) {
        ++pos_;
        break;
      }
      first = false;
      unsigned char lo = ClassChar();
      if (!AtEnd() && Peek() == '-' && pos_ + 1 < pattern_.size() &&
          pattern_[pos_ + 1] != ']') {
        ++pos_;
        unsigned char hi = ClassChar();
        if (hi < lo) Fail("reversed range");
        for (int ch = lo; ch <= hi; ++ch) set.set(ch);
      } else {
        set.set(lo);
      }
    }
    if (negate) set.flip();
    re_.classes_.push_back(set);
    return Single({Op::kClass, 0, static_cast<int>(re_.classes_.size()) - 1});
  }

  std::string_view pattern_;
  PortableRegex& re_;
  size_t pos_ = 0;
};

PortableRegex PortableRegex::Compile(std::string_view pattern) {
  PortableRegex re;
  re.pattern_ = std::string(pattern);
  RegexCompiler(re.pattern_, re).Run();
  return re;
}

bool PortableRegex::Search(std::string_view text) const {
  const size_t n = states_.size();
  std::vector<int> current;
  std::vector<int> next;
  std::vector<size_t> mark(n, static_cast<size_t>(-1));
  size_t generation = 0;
  bool matched = false;

  // Follows epsilon edges from `s` at text position `pos`, collecting the
  // consuming states into `list`.
  auto add = [&](auto&& self, std::vector<int>& list, int s, size_t pos) -> void {
    if (s < 0 || mark[s] == generation) return;
    mark[s] = generation;
    const State& st = states_[s];
    switch (st.op) {
      case Op::kSplit:
        self(self, list, st.out, pos);
        self(self, list, st.out1, pos);
        break;
      case Op::kJump:
        self(self, list, st.out, pos);
        break;
      case Op::kBegin:
        if (pos == 0) self(self, list, st.out, pos);
        break;
      case Op::kEnd:
        if (pos == text.size()) self(self, list, st.out, pos);
        break;
      case Op::kMatch:
        matched = true;
        break;
      default:
        list.push_back(s);
    }
  };

  for (size_t pos = 0;; ++pos) {
    // Unanchored search: a new thread may start at every position.
    add(add, current, start_, pos);
    if (matched) return true;
    if (pos == text.size()) return false;
    ++generation;
    next.clear();
    const auto ch = static_cast<unsigned char>(text[pos]);
    for (int s : current) {
      const State& st = states_[s];
      bool step = (st.op == Op::kChar && st.ch == ch) || st.op == Op::kAny ||
                  (st.op == Op::kClass && classes_[st.klass].test(ch));
      if (step) add(add, next, st.out, pos + 1);
    }
    if (matched) return true;
    std::swap(current, next);
  }
}

}  // namespace agent_warden
