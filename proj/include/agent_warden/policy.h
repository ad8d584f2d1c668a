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

// The Goal/Path/Rule policy language: AST, parser, canonical renderer,
// specificity ordering and a static linter.
//
//   Goal deny
//   Path db:$A -> * -> tool:$B
//   Rule A.integrity=="UNFILTERED" AND (B.sensitivity!="LOW")
//
// Path terms are `agent:`, `tool:` or `db:` followed by a `$Var` (typed term)
// or a literal subject name (named term), or `*`. A wildcard stands for any
// run of consecutive flow nodes; see WildcardArity in decision_engine.h. The
// Rule line is optional and defaults to true. Operator precedence is
// `!` > `AND` > `OR`.

#ifndef AGENT_WARDEN_POLICY_H_
#define AGENT_WARDEN_POLICY_H_

#include <compare>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agent_warden/labels.h"
#include "agent_warden/regex.h"

namespace agent_warden {

enum class Goal { kAllow, kDeny, kAsk };

std::string_view GoalName(Goal goal);

struct NodeTerm {
  enum class Form { kTyped, kNamed, kWildcard };

  Form form = Form::kWildcard;
  SubjectKind kind = SubjectKind::kAgent;
  // Variable name without the `$` for typed terms; subject name for named.
  std::string name;

  static NodeTerm Typed(SubjectKind kind, std::string var) {
    return {Form::kTyped, kind, std::move(var)};
  }
  static NodeTerm Named(SubjectKind kind, std::string subject) {
    return {Form::kNamed, kind, std::move(subject)};
  }
  static NodeTerm Wildcard() { return {}; }

  bool operator==(const NodeTerm& other) const;
};

struct PathPattern {
  std::vector<NodeTerm> terms;
  bool operator==(const PathPattern&) const = default;
};

enum class CmpOp { kEq, kNe };

struct RuleExpr;
using RulePtr = std::shared_ptr<const RuleExpr>;

struct AttrCmp {
  std::string var;
  Attribute attribute = Attribute::kIntegrity;
  CmpOp op = CmpOp::kEq;
  std::string literal;
  bool operator==(const AttrCmp&) const = default;
};

struct ArgMatch {
  std::string var;
  std::vector<std::string> arg_path;
  std::shared_ptr<const PortableRegex> regex;
  bool operator==(const ArgMatch& other) const {
    return var == other.var && arg_path == other.arg_path &&
           regex->pattern() == other.regex->pattern();
  }
};

struct AndExpr {
  std::vector<RulePtr> operands;
  bool operator==(const AndExpr& other) const;
};

struct OrExpr {
  std::vector<RulePtr> operands;
  bool operator==(const OrExpr& other) const;
};

struct NotExpr {
  RulePtr operand;
  bool operator==(const NotExpr& other) const;
};

// Immutable once built; subtrees are shared between Policy copies.
struct RuleExpr {
  std::variant<AttrCmp, ArgMatch, AndExpr, OrExpr, NotExpr> node;
  bool operator==(const RuleExpr&) const = default;
};

enum class PolicyOrigin { kBuiltin, kUserFile, kSynthesized };

std::string_view OriginName(PolicyOrigin origin);

struct Policy {
  Goal goal = Goal::kDeny;
  PathPattern path;
  RulePtr rule;  // null: always true
  PolicyOrigin origin = PolicyOrigin::kUserFile;
  std::string source_text;
  // Comment lines that preceded the policy in its pack, if any.
  std::string description;
};

// Compares goal, path and rule; origin, source text and description are
// presentation only.
bool StructurallyEqual(const Policy& a, const Policy& b);

// Throws kSyntaxError (with line/column), kUnboundVariable, kBadRegex or
// kUnknownGoal. `first_line` offsets reported line numbers.
Policy ParsePolicy(std::string_view text,
                   PolicyOrigin origin = PolicyOrigin::kUserFile,
                   int first_line = 1);

std::string RenderPolicy(const Policy& policy);
std::string RenderPath(const PathPattern& path);
std::string RenderRule(const RuleExpr& rule);

// A pack is plain text: policies separated by blank lines, `#` line comments.
std::vector<Policy> ParsePolicyPack(std::string_view text,
                                    PolicyOrigin origin = PolicyOrigin::kUserFile);
std::vector<Policy> LoadPolicyPack(const std::filesystem::path& path,
                                   PolicyOrigin origin = PolicyOrigin::kUserFile);

// Lexicographic; larger sorts earlier.
struct Specificity {
  int named_terms = 0;
  int typed_terms = 0;
  int negated_wildcards = 0;
  int rule_leaves = 0;
  auto operator<=>(const Specificity&) const = default;
};

Specificity ComputeSpecificity(const Policy& policy);
int CountRuleLeaves(const RuleExpr* rule);

// Stable: synthesized policies first, then specificity descending, then
// input order.
std::vector<Policy> SortPolicies(std::vector<Policy> policies);

enum class DiagnosticCode {
  kInapplicableAttribute,
  kUnknownValue,
  kUnreachablePolicy,
  kWildcardOnlyPath,
  kMissingAttribute,
};

std::string_view DiagnosticName(DiagnosticCode code);

struct Diagnostic {
  DiagnosticCode code;
  // Index into the list handed to the linter; unused for runtime diagnostics.
  size_t policy_index = 0;
  std::string message;
};

std::vector<Diagnostic> LintPolicies(std::span<const Policy> policies,
                                     const AttributeSchema& schema = DefaultSchema());

}  // namespace agent_warden

#endif  // AGENT_WARDEN_POLICY_H_
