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

// Gating of tool invocations against a policy database. Policies are tried in
// evaluation order and the first (policy, path binding) whose rule holds
// decides; when nothing matches the invocation is allowed.

#ifndef AGENT_WARDEN_DECISION_ENGINE_H_
#define AGENT_WARDEN_DECISION_ENGINE_H_

#include <chrono>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "agent_warden/policy.h"
#include "agent_warden/system_view.h"
#include "json.hpp"

namespace agent_warden {

// How many flow nodes one `*` term may stand for. Zero-or-more lets
// `agent:$A -> * -> tool:$B` cover an agent calling a tool directly as well as
// through intermediaries.
enum class WildcardArity { kZeroOrMore, kOneOrMore };

struct MatchOptions {
  WildcardArity wildcard = WildcardArity::kZeroOrMore;
  size_t max_path_len = kDefaultMaxPathLen;
};

struct Binding {
  std::map<std::string, NodeId> vars;
  FlowPath path;
  // Per pattern term, the [begin, end) range of path positions it consumed.
  std::vector<std::pair<size_t, size_t>> spans;
};

// Bindings of `pattern` against every candidate flow ending at `target`: the
// one-node path [target] followed by PathsTo(target), each in partition order.
std::vector<Binding> MatchPaths(const PathPattern& pattern, const SystemView& view,
                                NodeId target, const MatchOptions& options = {});

// Absent attributes or argument keys make their leaf false and add a
// kMissingAttribute diagnostic. A null rule is true.
bool EvalRule(const RuleExpr* rule, const Binding& binding, const SystemView& view,
              std::vector<Diagnostic>* diagnostics);

// Immutable, sorted policy list. Appending produces a new database with a
// bumped version; holders of the old one are unaffected.
class PolicyDB {
 public:
  PolicyDB() : policies_(std::make_shared<const std::vector<Policy>>()) {}
  explicit PolicyDB(std::vector<Policy> policies, uint64_t version = 0);

  const std::vector<Policy>& policies() const { return *policies_; }
  uint64_t version() const { return version_; }
  size_t size() const { return policies_->size(); }

  PolicyDB WithPolicy(Policy policy) const;

 private:
  std::shared_ptr<const std::vector<Policy>> policies_;
  uint64_t version_ = 0;
};

struct MatchedPolicy {
  Policy policy;
  size_t index = 0;  // position in the PolicyDB evaluation order
  Binding binding;
};

struct Decision {
  Goal outcome = Goal::kAllow;
  std::optional<MatchedPolicy> matched;
  std::string explanation;
  std::vector<Diagnostic> diagnostics;
};

// Throws kNotPending unless `pending` is a tool node awaiting its gate.
Decision Decide(const SystemView& view, NodeId pending, const PolicyDB& db,
                const MatchOptions& options = {});

// Subject names along the matched flow, for logs and prompts.
std::vector<std::string> PathNames(const SystemView& view, const FlowPath& path);

enum class AskChoice { kDisallow, kAllowOnce, kAlwaysAllow };

std::string_view AskChoiceName(AskChoice choice);
std::optional<AskChoice> ParseAskChoice(std::string_view text);

// A concrete ALLOW for exactly the subjects on the matched flow. The user node
// is dropped because the policy language has no user terms.
Policy SynthesizeAllowPolicy(const Binding& binding, const SystemView& view);

struct AskOutcome {
  Goal final = Goal::kDeny;  // kAllow or kDeny
  PolicyDB db;
  std::optional<Policy> synthesized;
};

AskOutcome ResolveAsk(const Decision& decision, AskChoice choice, const PolicyDB& db,
                      const SystemView& view);

struct AskRequest {
  std::string ask_id;
  std::string round_id;
  std::vector<std::pair<std::string, SubjectKind>> path;
  std::string policy_text;
  std::string explanation;
  std::chrono::system_clock::time_point deadline;
};

nlohmann::json AskRequestToJson(const AskRequest& request);

// Source of answers to ASK decisions. Answers may arrive at any time; the
// caller enforces the deadline.
class AskResponder {
 public:
  virtual ~AskResponder() = default;
  virtual std::future<AskChoice> Ask(const AskRequest& request) = 0;
};

// Waits up to `timeout` for the responder. No answer in time, or a responder
// failure, yields kDisallow with `*timed_out` set.
AskChoice AwaitAsk(AskResponder& responder, const AskRequest& request,
                   std::chrono::milliseconds timeout, bool* timed_out = nullptr);

// Answers from a fixed list, in order, then `fallback`.
class ScriptedResponder : public AskResponder {
 public:
  explicit ScriptedResponder(std::vector<AskChoice> answers = {},
                             AskChoice fallback = AskChoice::kDisallow)
      : answers_(std::move(answers)), fallback_(fallback) {}
  std::future<AskChoice> Ask(const AskRequest& request) override;
  void Push(AskChoice choice);
  size_t asked() const;

 private:
  mutable std::mutex mu_;
  std::vector<AskChoice> answers_;
  size_t next_ = 0;
  size_t asked_ = 0;
  AskChoice fallback_;
};

// Never answers. Keeps its promises alive so the futures stay unresolved.
class SilentResponder : public AskResponder {
 public:
  std::future<AskChoice> Ask(const AskRequest& request) override;

 private:
  std::mutex mu_;
  std::vector<std::promise<AskChoice>> promises_;
};

// Prompts on a terminal stream pair. Reads happen on a detached thread so a
// timed-out question does not block the caller.
class TerminalResponder : public AskResponder {
 public:
  TerminalResponder(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
  std::future<AskChoice> Ask(const AskRequest& request) override;

 private:
  std::istream& in_;
  std::ostream& out_;
};

// Parks questions until a remote client answers them by id; backs the serve
// protocol.
class QueueResponder : public AskResponder {
 public:
  std::future<AskChoice> Ask(const AskRequest& request) override;

  // Unanswered requests whose deadline has not passed.
  std::vector<AskRequest> Pending() const;
  // False if the id is unknown or already answered.
  bool Answer(const std::string& ask_id, AskChoice choice);
  // Drops requests whose deadline has passed.
  void Expire(std::chrono::system_clock::time_point now);

 private:
  struct Slot {
    AskRequest request;
    std::promise<AskChoice> promise;
  };
  mutable std::mutex mu_;
  std::map<std::string, Slot> slots_;
};

struct DecisionRecord {
  std::string round_id;
  std::string pending_tool;
  nlohmann::json args;
  Goal outcome = Goal::kAllow;
  // After an ASK: its id, the final outcome and how it was reached.
  std::optional<std::string> ask_id;
  std::optional<Goal> final;
  std::optional<AskChoice> choice;
  bool timed_out = false;
  std::optional<std::string> policy_source_text;
  std::optional<std::string> synthesized_policy;
  std::vector<std::string> path;
  std::vector<std::string> diagnostics;

  // The effective verdict: `final` when set, else `outcome`.
  Goal Effective() const { return final.value_or(outcome); }
  nlohmann::json ToJson() const;
};

// Append-only record list; each record gets a sequence number starting at 1.
class DecisionLog {
 public:
  uint64_t Append(DecisionRecord record);
  std::vector<std::pair<uint64_t, DecisionRecord>> Since(uint64_t seq) const;
  size_t size() const;
  // One JSON object per line, without sequence numbers.
  std::string ToJsonl() const;

 private:
  mutable std::mutex mu_;
  std::vector<DecisionRecord> records_;
};

}  // namespace agent_warden

#endif  // AGENT_WARDEN_DECISION_ENGINE_H_
