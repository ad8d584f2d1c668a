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

#include "agent_warden/policy.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "agent_warden/error.h"
#include "text_util.h"

namespace agent_warden {

namespace {

bool SameOperands(const std::vector<RulePtr>& a, const std::vector<RulePtr>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                    [](const RulePtr& x, const RulePtr& y) { return *x == *y; });
}

}  // namespace

bool NodeTerm::operator==(const NodeTerm& other) const {
  if (form != other.form) return false;
  if (form == Form::kWildcard) return true;
  return kind == other.kind && name == other.name;
}

bool AndExpr::operator==(const AndExpr& other) const {
  return SameOperands(operands, other.operands);
}

bool OrExpr::operator==(const OrExpr& other) const {
  return SameOperands(operands, other.operands);
}

bool NotExpr::operator==(const NotExpr& other) const {
  return *operand == *other.operand;
}

std::string_view GoalName(Goal goal) {
  switch (goal) {
    case Goal::kAllow: return "allow";
    case Goal::kDeny: return "deny";
    case Goal::kAsk: return "ask";
  }
  return "?";
}

std::string_view OriginName(PolicyOrigin origin) {
  switch (origin) {
    case PolicyOrigin::kBuiltin: return "BUILTIN";
    case PolicyOrigin::kUserFile: return "USER_FILE";
    case PolicyOrigin::kSynthesized: return "SYNTHESIZED";
  }
  return "?";
}

bool StructurallyEqual(const Policy& a, const Policy& b) {
  if (a.goal != b.goal || a.path != b.path) return false;
  if (!a.rule || !b.rule) return !a.rule && !b.rule;
  return *a.rule == *b.rule;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
  kIdent, kVar, kString, kArrow, kStar, kColon, kDot, kLParen, kRParen,
  kBang, kEq, kNe, kEnd,
};

struct Token {
  Tok type;
  std::string text;
  int line;
  int column;
  // Goal/Path/Rule as the first token of a physical line: starts a new
  // section. Any other line continues the current one.
  bool section;
  bool at_line_start = false;
};

[[noreturn]] void SyntaxError(int line, int column, const std::string& what) {
  throw Error(ErrorCode::kSyntaxError, "line " + std::to_string(line) +
                                           ", column " + std::to_string(column) +
                                           ": " + what);
}

bool IsIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool IsIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::vector<Token> Lex(std::string_view text, int first_line) {
  std::vector<Token> tokens;
  int line = first_line;
  int column = 1;
  bool line_start = true;
  size_t i = 0;
  auto advance = [&](size_t n) {
    i += n;
    column += static_cast<int>(n);
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      ++i;
      ++line;
      column = 1;
      line_start = true;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token tok{Tok::kEnd, "", line, column, false};
    tok.at_line_start = line_start;
    line_start = false;
    if (IsIdentStart(c)) {
      size_t j = i;
      while (j < text.size() && IsIdentChar(text[j])) ++j;
      tok.type = Tok::kIdent;
      tok.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (c == '$') {
      size_t j = i + 1;
      if (j >= text.size() || !IsIdentStart(text[j])) {
        SyntaxError(line, column, "expected variable name after '$'");
      }
      while (j < text.size() && IsIdentChar(text[j])) ++j;
      tok.type = Tok::kVar;
      tok.text = std::string(text.substr(i + 1, j - i - 1));
      advance(j - i);
    } else if (c == '"') {
      std::string value;
      size_t j = i + 1;
      bool closed = false;
      while (j < text.size()) {
        char d = text[j];
        if (d == '\n') break;
        if (d == '"') {
          closed = true;
          break;
        }
        if (d == '\\' && j + 1 < text.size() &&
            (text[j + 1] == '"' || text[j + 1] == '\\')) {
          value.push_back(text[j + 1]);
          j += 2;
          continue;
        }
        // Any other backslash sequence is kept verbatim (regex escapes).
        value.push_back(d);
        ++j;
      }
      if (!closed) SyntaxError(line, column, "unterminated string literal");
      tok.type = Tok::kString;
      tok.text = std::move(value);
      advance(j + 1 - i);
    } else if (text.substr(i, 2) == "->") {
      tok.type = Tok::kArrow;
      advance(2);
    } else if (text.substr(i, 2) == "==") {
      tok.type = Tok::kEq;
      advance(2);
    } else if (text.substr(i, 2) == "!=") {
      tok.type = Tok::kNe;
      advance(2);
    } else {
      switch (c) {
        case '*': tok.type = Tok::kStar; break;
        case ':': tok.type = Tok::kColon; break;
        case '.': tok.type = Tok::kDot; break;
        case '(': tok.type = Tok::kLParen; break;
        case ')': tok.type = Tok::kRParen; break;
        case '!': tok.type = Tok::kBang; break;
        default:
          SyntaxError(line, column, std::string("unexpected character '") + c + "'");
      }
      advance(1);
    }
    tok.section = tok.at_line_start && tok.type == Tok::kIdent &&
                  (tok.text == "Goal" || tok.text == "Path" || tok.text == "Rule");
    tokens.push_back(std::move(tok));
  }
  tokens.push_back({Tok::kEnd, "", line, column, true});
  return tokens;
}

// ---------------------------------------------------------------------------
// Parser

bool IsAttributeKeyword(std::string_view word) {
  return word == "object" || word == "action" || word == "sensitivity" ||
         word == "integrity" || word == "integrality" || word == "privacy";
}

class Parser {
 public:
  Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  Policy Parse() {
    Policy policy;
    ExpectSection("Goal");
    const Token& goal = Next();
    if (goal.type != Tok::kIdent || goal.section) {
      SyntaxError(goal.line, goal.column, "expected goal after 'Goal'");
    }
    if (goal.text == "allow") {
      policy.goal = Goal::kAllow;
    } else if (goal.text == "deny") {
      policy.goal = Goal::kDeny;
    } else if (goal.text == "ask") {
      policy.goal = Goal::kAsk;
    } else {
      throw Error(ErrorCode::kUnknownGoal,
                  "line " + std::to_string(goal.line) + ", column " +
                      std::to_string(goal.column) + ": '" + goal.text +
                      "' is not one of allow, deny, ask");
    }
    ExpectSection("Path");
    policy.path.terms.push_back(ParseTerm());
    while (Peek().type == Tok::kArrow) {
      Next();
      policy.path.terms.push_back(ParseTerm());
    }
    if (IsSection("Rule")) {
      Next();
      policy.rule = ParseOr();
    }
    if (Peek().type != Tok::kEnd) {
      const Token& t = Peek();
      SyntaxError(t.line, t.column,
                  t.section ? "expected 'Rule' line or end of policy"
                               : "unexpected token");
    }
    return policy;
  }

 private:
  const Token& Peek() const { return tokens_[pos_]; }
  const Token& Next() { return tokens_[pos_ == tokens_.size() - 1 ? pos_ : pos_++]; }

  bool IsSection(std::string_view keyword) const {
    const Token& t = Peek();
    return t.type == Tok::kIdent && t.section && t.text == keyword;
  }

  void ExpectSection(std::string_view keyword) {
    if (!IsSection(keyword)) {
      const Token& t = Peek();
      SyntaxError(t.line, t.column,
                  "expected '" + std::string(keyword) + "' at start of line");
    }
    Next();
  }

  const Token& Expect(Tok type, const char* what) {
    const Token& t = Peek();
    // A keyword at the start of a line ends the current line group.
    if (t.type != type || (t.section && t.type != Tok::kEnd)) {
      SyntaxError(t.line, t.column, std::string("expected ") + what);
    }
    return Next();
  }

  NodeTerm ParseTerm() {
    const Token& t = Peek();
    if (t.type == Tok::kStar && !t.section) {
      Next();
      return NodeTerm::Wildcard();
    }
    const Token& kind_tok = Expect(Tok::kIdent, "node type (agent, tool, db) or '*'");
    SubjectKind kind;
    if (kind_tok.text == "agent") {
      kind = SubjectKind::kAgent;
    } else if (kind_tok.text == "tool") {
      kind = SubjectKind::kTool;
    } else if (kind_tok.text == "db") {
      kind = SubjectKind::kRagDb;
    } else {
      SyntaxError(kind_tok.line, kind_tok.column,
                  "unknown node type '" + kind_tok.text + "'");
    }
    Expect(Tok::kColon, "':' after node type");
    const Token& name = Peek();
    if (name.type == Tok::kVar && !name.section) {
      Next();
      return NodeTerm::Typed(kind, name.text);
    }
    const Token& subject = Expect(Tok::kIdent, "'$Var' or subject name");
    return NodeTerm::Named(kind, subject.text);
  }

  bool PeekKeyword(std::string_view word) const {
    const Token& t = Peek();
    return t.type == Tok::kIdent && !t.section && t.text == word;
  }

  RulePtr ParseOr() {
    std::vector<RulePtr> operands{ParseAnd()};
    while (PeekKeyword("OR")) {
      Next();
      operands.push_back(ParseAnd());
    }
    if (operands.size() == 1) return operands.front();
    return std::make_shared<RuleExpr>(RuleExpr{OrExpr{std::move(operands)}});
  }

  RulePtr ParseAnd() {
    std::vector<RulePtr> operands{ParseNot()};
    while (PeekKeyword("AND")) {
      Next();
      operands.push_back(ParseNot());
    }
    if (operands.size() == 1) return operands.front();
    return std::make_shared<RuleExpr>(RuleExpr{AndExpr{std::move(operands)}});
  }

  RulePtr ParseNot() {
    const Token& t = Peek();
    if (t.type == Tok::kBang && !t.section) {
      Next();
      return std::make_shared<RuleExpr>(RuleExpr{NotExpr{ParseNot()}});
    }
    return ParseAtom();
  }

  RulePtr ParseAtom() {
    const Token& t = Peek();
    if (t.type == Tok::kLParen && !t.section) {
      Next();
      RulePtr inner = ParseOr();
      Expect(Tok::kRParen, "')'");
      return inner;
    }
    const Token& var = Expect(Tok::kIdent, "condition");
    if (var.text == "AND" || var.text == "OR") {
      SyntaxError(var.line, var.column, "missing operand before '" + var.text + "'");
    }
    Expect(Tok::kDot, "'.' after variable");
    const Token& member = Expect(Tok::kIdent, "attribute name or 'args'");
    if (member.text == "args") return ParseArgMatch(var.text);
    if (!IsAttributeKeyword(member.text)) {
      SyntaxError(member.line, member.column,
                  "unknown attribute '" + member.text + "'");
    }
    AttrCmp cmp;
    cmp.var = var.text;
    cmp.attribute = *ParseAttribute(member.text);
    const Token& op = Peek();
    if (op.type == Tok::kEq && !op.section) {
      cmp.op = CmpOp::kEq;
    } else if (op.type == Tok::kNe && !op.section) {
      cmp.op = CmpOp::kNe;
    } else {
      SyntaxError(op.line, op.column, "expected '==' or '!='");
    }
    Next();
    cmp.literal = Expect(Tok::kString, "string literal").text;
    return std::make_shared<RuleExpr>(RuleExpr{std::move(cmp)});
  }

  RulePtr ParseArgMatch(const std::string& var) {
    ArgMatch match;
    match.var = var;
    while (true) {
      Expect(Tok::kDot, "'.' in argument path");
      const Token& key = Expect(Tok::kIdent, "argument key or 'match'");
      if (key.text == "match" && Peek().type == Tok::kLParen && !Peek().section) {
        break;
      }
      match.arg_path.push_back(key.text);
    }
    const Token& open = Next();  // '('
    if (match.arg_path.empty()) {
      SyntaxError(open.line, open.column, "argument path needs at least one key");
    }
    const Token& pattern = Expect(Tok::kString, "regular expression string");
    match.regex = std::make_shared<PortableRegex>(PortableRegex::Compile(pattern.text));
    Expect(Tok::kRParen, "')' after regular expression");
    return std::make_shared<RuleExpr>(RuleExpr{std::move(match)});
  }

  std::vector<Token> tokens_;
  size_t pos_ = 0;
};

void CollectRuleVars(const RuleExpr& rule, std::set<std::string>& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, AttrCmp> || std::is_same_v<T, ArgMatch>) {
          out.insert(node.var);
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          CollectRuleVars(*node.operand, out);
        } else {
          for (const RulePtr& child : node.operands) CollectRuleVars(*child, out);
        }
      },
      rule.node);
}

}  // namespace

Policy ParsePolicy(std::string_view text, PolicyOrigin origin, int first_line) {
  Policy policy = Parser(Lex(text, first_line)).Parse();
  policy.origin = origin;
  policy.source_text = std::string(text);

  std::set<std::string> declared;
  bool has_concrete = false;
  for (const NodeTerm& term : policy.path.terms) {
    if (term.form != NodeTerm::Form::kWildcard) has_concrete = true;
    if (term.form == NodeTerm::Form::kTyped && !declared.insert(term.name).second) {
      throw Error(ErrorCode::kSyntaxError,
                  "variable $" + term.name + " declared twice in Path");
    }
  }
  if (!has_concrete) {
    throw Error(ErrorCode::kSyntaxError, "Path needs at least one non-wildcard term");
  }
  if (policy.rule) {
    std::set<std::string> used;
    CollectRuleVars(*policy.rule, used);
    for (const std::string& var : used) {
      if (!declared.contains(var)) {
        throw Error(ErrorCode::kUnboundVariable,
                    "Rule uses " + var + " but Path declares no $" + var);
      }
    }
  }
  return policy;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string QuoteLiteral(std::string_view value) {
  std::string out = "\"";
  for (size_t i = 0; i < value.size(); ++i) {
    char c = value[i];
    if (c == '"') {
      out += "\\\"";
    } else if (c == '\\') {
      // A lone backslash survives the lexer verbatim unless it would be read
      // as an escape or would swallow the closing quote.
      bool needs_escape = i + 1 == value.size() || value[i + 1] == '"' ||
                          value[i + 1] == '\\';
      out += needs_escape ? "\\\\" : "\\";
    } else {
      out += c;
    }
  }
  out += '"';
  return out;
}

enum class Prec { kOr = 1, kAnd = 2, kNot = 3, kLeaf = 4 };

Prec PrecedenceOf(const RuleExpr& rule) {
  switch (rule.node.index()) {
    case 2: return Prec::kAnd;
    case 3: return Prec::kOr;
    case 4: return Prec::kNot;
    default: return Prec::kLeaf;
  }
}

void RenderInto(const RuleExpr& rule, std::string& out);

// Parenthesizes nested n-ary nodes of any kind so the tree shape survives a
// re-parse, not only the meaning.
void RenderOperand(const RuleExpr& operand, Prec parent, std::string& out) {
  Prec p = PrecedenceOf(operand);
  bool parens = p == Prec::kOr || (p == Prec::kAnd && parent != Prec::kOr);
  if (parens) out += '(';
  RenderInto(operand, out);
  if (parens) out += ')';
}

void RenderInto(const RuleExpr& rule, std::string& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, AttrCmp>) {
          out += node.var + "." + std::string(AttributeName(node.attribute)) +
                 (node.op == CmpOp::kEq ? "==" : "!=") + QuoteLiteral(node.literal);
        } else if constexpr (std::is_same_v<T, ArgMatch>) {
          out += node.var + ".args";
          for (const std::string& key : node.arg_path) out += "." + key;
          out += ".match(" + QuoteLiteral(node.regex->pattern()) + ")";
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          out += '!';
          RenderOperand(*node.operand, Prec::kNot, out);
        } else {
          constexpr bool kIsAnd = std::is_same_v<T, AndExpr>;
          const Prec self = kIsAnd ? Prec::kAnd : Prec::kOr;
          for (size_t i = 0; i < node.operands.size(); ++i) {
            if (i > 0) out += kIsAnd ? " AND " : " OR ";
            RenderOperand(*node.operands[i], self, out);
          }
        }
      },
      rule.node);
}

}  // namespace

std::string RenderRule(const RuleExpr& rule) {
  std::string out;
  RenderInto(rule, out);
  return out;
}

std::string RenderPath(const PathPattern& path) {
  std::string out;
  for (size_t i = 0; i < path.terms.size(); ++i) {
    if (i > 0) out += " -> ";
    const NodeTerm& term = path.terms[i];
    switch (term.form) {
      case NodeTerm::Form::kWildcard:
        out += '*';
        break;
      case NodeTerm::Form::kTyped:
        out += std::string(KindName(term.kind)) + ":$" + term.name;
        break;
      case NodeTerm::Form::kNamed:
        out += std::string(KindName(term.kind)) + ":" + term.name;
        break;
    }
  }
  return out;
}

std::string RenderPolicy(const Policy& policy) {
  std::string out = "Goal " + std::string(GoalName(policy.goal)) + "\nPath " +
                    RenderPath(policy.path) + "\n";
  if (policy.rule) out += "Rule " + RenderRule(*policy.rule) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Packs

std::vector<Policy> ParsePolicyPack(std::string_view text, PolicyOrigin origin) {
  std::vector<Policy> policies;
  std::string block;
  std::string comments;
  int block_first_line = 0;
  int line_no = 0;

  auto flush = [&]() {
    if (block.empty()) {
      return;
    }
    Policy policy = ParsePolicy(block, origin, block_first_line);
    policy.description = comments;
    policies.push_back(std::move(policy));
    block.clear();
    comments.clear();
  };

  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) {
      flush();
      if (block.empty()) comments.clear();
      continue;
    }
    if (line[first] == '#') {
      if (block.empty()) {
        std::string comment = line.substr(first + 1);
        if (!comment.empty() && comment.front() == ' ') comment.erase(0, 1);
        if (!comments.empty()) comments += ' ';
        comments += comment;
      }
      continue;
    }
    if (block.empty()) block_first_line = line_no;
    block += line;
    block += '\n';
  }
  flush();
  return policies;
}

std::vector<Policy> LoadPolicyPack(const std::filesystem::path& path,
                                   PolicyOrigin origin) {
  return ParsePolicyPack(internal::ReadFile(path), origin);
}

// ---------------------------------------------------------------------------
// Ordering

int CountRuleLeaves(const RuleExpr* rule) {
  if (rule == nullptr) return 0;
  return std::visit(
      [](const auto& node) -> int {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, AttrCmp> || std::is_same_v<T, ArgMatch>) {
          return 1;
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          return CountRuleLeaves(node.operand.get());
        } else {
          int total = 0;
          for (const RulePtr& child : node.operands) total += CountRuleLeaves(child.get());
          return total;
        }
      },
      rule->node);
}

Specificity ComputeSpecificity(const Policy& policy) {
  Specificity s;
  for (const NodeTerm& term : policy.path.terms) {
    switch (term.form) {
      case NodeTerm::Form::kNamed: ++s.named_terms; break;
      case NodeTerm::Form::kTyped: ++s.typed_terms; break;
      case NodeTerm::Form::kWildcard: --s.negated_wildcards; break;
    }
  }
  s.rule_leaves = CountRuleLeaves(policy.rule.get());
  return s;
}

std::vector<Policy> SortPolicies(std::vector<Policy> policies) {
  std::stable_sort(policies.begin(), policies.end(),
                   [](const Policy& a, const Policy& b) {
                     bool sa = a.origin == PolicyOrigin::kSynthesized;
                     bool sb = b.origin == PolicyOrigin::kSynthesized;
                     if (sa != sb) return sa;
                     return ComputeSpecificity(a) > ComputeSpecificity(b);
                   });
  return policies;
}

// ---------------------------------------------------------------------------
// Lint

std::string_view DiagnosticName(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::kInapplicableAttribute: return "InapplicableAttribute";
    case DiagnosticCode::kUnknownValue: return "UnknownValue";
    case DiagnosticCode::kUnreachablePolicy: return "UnreachablePolicy";
    case DiagnosticCode::kWildcardOnlyPath: return "WildcardOnlyPath";
    case DiagnosticCode::kMissingAttribute: return "MissingAttribute";
  }
  return "?";
}

namespace {

void LintLeaves(const RuleExpr& rule, const std::map<std::string, SubjectKind>& vars,
                const AttributeSchema& schema, size_t index,
                std::vector<Diagnostic>& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, AttrCmp>) {
          auto it = vars.find(node.var);
          if (it == vars.end()) return;
          auto allowed = schema.find(it->second);
          if (allowed == schema.end() || !allowed->second.contains(node.attribute)) {
            out.push_back({DiagnosticCode::kInapplicableAttribute, index,
                           node.var + "." + std::string(AttributeName(node.attribute)) +
                               ": " + std::string(KindName(it->second)) +
                               " subjects carry no such attribute"});
          }
          if (!IsAllowedValue(node.attribute, node.literal)) {
            out.push_back({DiagnosticCode::kUnknownValue, index,
                           "\"" + node.literal + "\" is not a value of " +
                               std::string(AttributeName(node.attribute))});
          }
        } else if constexpr (std::is_same_v<T, ArgMatch>) {
          auto it = vars.find(node.var);
          if (it != vars.end() && it->second != SubjectKind::kTool) {
            out.push_back({DiagnosticCode::kInapplicableAttribute, index,
                           node.var + ".args: only tool invocations record arguments"});
          }
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          LintLeaves(*node.operand, vars, schema, index, out);
        } else {
          for (const RulePtr& child : node.operands) {
            LintLeaves(*child, vars, schema, index, out);
          }
        }
      },
      rule.node);
}

std::vector<RulePtr> Conjuncts(const RulePtr& rule) {
  if (!rule) return {};
  if (const auto* conj = std::get_if<AndExpr>(&rule->node)) return conj->operands;
  return {rule};
}

// True when every conjunct of `weaker` also appears in `stronger`, so
// `weaker` holds whenever `stronger` does.
bool Implies(const RulePtr& stronger, const RulePtr& weaker) {
  std::vector<RulePtr> have = Conjuncts(stronger);
  for (const RulePtr& need : Conjuncts(weaker)) {
    bool found = std::any_of(have.begin(), have.end(),
                             [&](const RulePtr& h) { return *h == *need; });
    if (!found) return false;
  }
  return true;
}

}  // namespace

std::vector<Diagnostic> LintPolicies(std::span<const Policy> policies,
                                     const AttributeSchema& schema) {
  std::vector<Diagnostic> out;
  for (size_t i = 0; i < policies.size(); ++i) {
    const Policy& policy = policies[i];
    std::map<std::string, SubjectKind> vars;
    bool concrete = false;
    for (const NodeTerm& term : policy.path.terms) {
      if (term.form == NodeTerm::Form::kTyped) vars.emplace(term.name, term.kind);
      if (term.form != NodeTerm::Form::kWildcard) concrete = true;
    }
    if (!concrete) {
      out.push_back({DiagnosticCode::kWildcardOnlyPath, i,
                     "path matches every flow: " + RenderPath(policy.path)});
    }
    if (policy.rule) LintLeaves(*policy.rule, vars, schema, i, out);
  }

  // Shadowing is judged in evaluation order.
  std::vector<size_t> order(policies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    bool sa = policies[a].origin == PolicyOrigin::kSynthesized;
    bool sb = policies[b].origin == PolicyOrigin::kSynthesized;
    if (sa != sb) return sa;
    return ComputeSpecificity(policies[a]) > ComputeSpecificity(policies[b]);
  });
  for (size_t later = 1; later < order.size(); ++later) {
    const Policy& victim = policies[order[later]];
    for (size_t earlier = 0; earlier < later; ++earlier) {
      const Policy& shadow = policies[order[earlier]];
      if (shadow.goal == Goal::kAsk) continue;
      if (shadow.path == victim.path && Implies(victim.rule, shadow.rule)) {
        out.push_back({DiagnosticCode::kUnreachablePolicy, order[later],
                       "never reached: an earlier " +
                           std::string(GoalName(shadow.goal)) +
                           " policy with the same path fires first"});
        break;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Diagnostic& a, const Diagnostic& b) {
    return a.policy_index < b.policy_index;
  });
  return out;
}

}  // namespace agent_warden
