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

#include "agent_warden/decision_engine.h"

#include <istream>
#include <ostream>
#include <thread>

#include "agent_warden/error.h"
#include "text_util.h"

namespace agent_warden {

// ---------------------------------------------------------------------------
// Matching

namespace {

bool TermAccepts(const NodeTerm& term, const NodeInstance& node) {
  switch (term.form) {
    case NodeTerm::Form::kWildcard:
      return true;
    case NodeTerm::Form::kTyped:
      return node.kind == term.kind;
    case NodeTerm::Form::kNamed:
      return node.kind == term.kind && node.subject_name == term.name;
  }
  return false;
}

// Enumerates every way to split `path` across the pattern terms, in order of
// shortest wildcard first at each position.
void MatchFrom(const PathPattern& pattern, const SystemView& view, const FlowPath& path,
               size_t term, size_t pos, WildcardArity arity, Binding& current,
               std::vector<Binding>& out) {
  const size_t n = path.nodes.size();
  if (term == pattern.terms.size()) {
    if (pos == n) out.push_back(current);
    return;
  }
  const NodeTerm& t = pattern.terms[term];
  if (t.form == NodeTerm::Form::kWildcard) {
    size_t min = arity == WildcardArity::kOneOrMore ? 1 : 0;
    for (size_t take = min; pos + take <= n; ++take) {
      current.spans.emplace_back(pos, pos + take);
      MatchFrom(pattern, view, path, term + 1, pos + take, arity, current, out);
      current.spans.pop_back();
    }
    return;
  }
  if (pos >= n) return;
  const NodeInstance& node = view.node(path.nodes[pos]);
  if (!TermAccepts(t, node)) return;
  current.spans.emplace_back(pos, pos + 1);
  if (t.form == NodeTerm::Form::kTyped) current.vars[t.name] = node.id;
  MatchFrom(pattern, view, path, term + 1, pos + 1, arity, current, out);
  if (t.form == NodeTerm::Form::kTyped) current.vars.erase(t.name);
  current.spans.pop_back();
}

}  // namespace

std::vector<Binding> MatchPaths(const PathPattern& pattern, const SystemView& view,
                                NodeId target, const MatchOptions& options) {
  std::vector<Binding> out;
  if (pattern.terms.empty() || !view.Contains(target)) return out;
  std::vector<FlowPath> candidates;
  candidates.push_back({{target}, {}});
  for (FlowPath& p : view.PathsTo(target, options.max_path_len)) {
    candidates.push_back(std::move(p));
  }
  for (const FlowPath& path : candidates) {
    Binding current;
    current.path = path;
    MatchFrom(pattern, view, path, 0, 0, options.wildcard, current, out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rules

namespace {

void Missing(std::vector<Diagnostic>* diagnostics, std::string message) {
  if (diagnostics != nullptr) {
    diagnostics->push_back({DiagnosticCode::kMissingAttribute, 0, std::move(message)});
  }
}

const NodeInstance* Bound(const Binding& binding, const SystemView& view,
                          const std::string& var) {
  auto it = binding.vars.find(var);
  if (it == binding.vars.end()) return nullptr;
  return &view.node(it->second);
}

bool EvalAttr(const AttrCmp& cmp, const Binding& binding, const SystemView& view,
              std::vector<Diagnostic>* diagnostics) {
  const NodeInstance* node = Bound(binding, view, cmp.var);
  std::optional<std::string_view> value;
  if (node != nullptr) value = node->label.Get(cmp.attribute);
  if (!value) {
    Missing(diagnostics, cmp.var + "." + std::string(AttributeName(cmp.attribute)) +
                             " is not set on " +
                             (node != nullptr ? node->subject_name : "an unbound variable"));
    return false;
  }
  bool equal = *value == cmp.literal;
  return cmp.op == CmpOp::kEq ? equal : !equal;
}

bool EvalArg(const ArgMatch& match, const Binding& binding, const SystemView& view,
             std::vector<Diagnostic>* diagnostics) {
  const NodeInstance* node = Bound(binding, view, match.var);
  std::string dotted = match.var + ".args";
  for (const std::string& key : match.arg_path) dotted += "." + key;
  if (node == nullptr || node->kind != SubjectKind::kTool) {
    Missing(diagnostics, dotted + ": no invocation arguments on this node");
    return false;
  }
  const nlohmann::json* cursor = &node->args;
  for (const std::string& key : match.arg_path) {
    if (!cursor->is_object() || !cursor->contains(key)) {
      Missing(diagnostics, dotted + " is not set on " + node->subject_name);
      return false;
    }
    cursor = &(*cursor)[key];
  }
  if (cursor->is_string()) return match.regex->Search(cursor->get<std::string>());
  if (cursor->is_primitive() && !cursor->is_null()) {
    return match.regex->Search(cursor->dump());
  }
  Missing(diagnostics, dotted + " on " + node->subject_name + " is not a scalar");
  return false;
}

}  // namespace

bool EvalRule(const RuleExpr* rule, const Binding& binding, const SystemView& view,
              std::vector<Diagnostic>* diagnostics) {
  if (rule == nullptr) return true;
  return std::visit(
      [&](const auto& node) -> bool {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, AttrCmp>) {
          return EvalAttr(node, binding, view, diagnostics);
        } else if constexpr (std::is_same_v<T, ArgMatch>) {
          return EvalArg(node, binding, view, diagnostics);
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          return !EvalRule(node.operand.get(), binding, view, diagnostics);
        } else if constexpr (std::is_same_v<T, AndExpr>) {
          for (const RulePtr& child : node.operands) {
            if (!EvalRule(child.get(), binding, view, diagnostics)) return false;
          }
          return true;
        } else {
          for (const RulePtr& child : node.operands) {
            if (EvalRule(child.get(), binding, view, diagnostics)) return true;
          }
          return false;
        }
      },
      rule->node);
}

// ---------------------------------------------------------------------------
// Policy database and decisions

PolicyDB::PolicyDB(std::vector<Policy> policies, uint64_t version)
    : policies_(std::make_shared<const std::vector<Policy>>(
          SortPolicies(std::move(policies)))),
      version_(version) {}

PolicyDB PolicyDB::WithPolicy(Policy policy) const {
  std::vector<Policy> next = *policies_;
  next.push_back(std::move(policy));
  return PolicyDB(std::move(next), version_ + 1);
}

std::vector<std::string> PathNames(const SystemView& view, const FlowPath& path) {
  std::vector<std::string> names;
  for (NodeId id : path.nodes) names.push_back(view.node(id).subject_name);
  return names;
}

namespace {

std::string JoinArrow(const std::vector<std::string>& names) {
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += " -> ";
    out += names[i];
  }
  return out;
}

std::string Explain(const Policy& policy, const std::vector<std::string>& names) {
  std::string what = policy.description.empty() ? RenderPath(policy.path)
                                                : policy.description;
  return internal::ToUpper(GoalName(policy.goal)) + " by policy \"" + what +
         "\" on flow " + JoinArrow(names);
}

}  // namespace

Decision Decide(const SystemView& view, NodeId pending, const PolicyDB& db,
                const MatchOptions& options) {
  if (!view.Contains(pending) || view.node(pending).kind != SubjectKind::kTool ||
      view.node(pending).status != InvocationStatus::kPending) {
    throw Error(ErrorCode::kNotPending, "no pending invocation at that node");
  }
  Decision decision;
  const std::vector<Policy>& policies = db.policies();
  for (size_t i = 0; i < policies.size(); ++i) {
    const Policy& policy = policies[i];
    for (Binding& binding : MatchPaths(policy.path, view, pending, options)) {
      std::vector<Diagnostic> diagnostics;
      bool fired = EvalRule(policy.rule.get(), binding, view, &diagnostics);
      for (Diagnostic& d : diagnostics) {
        d.policy_index = i;
        decision.diagnostics.push_back(std::move(d));
      }
      if (fired) {
        decision.outcome = policy.goal;
        decision.explanation = Explain(policy, PathNames(view, binding.path));
        decision.matched = MatchedPolicy{policy, i, std::move(binding)};
        return decision;
      }
    }
  }
  decision.outcome = Goal::kAllow;
  decision.explanation = "ALLOW by default: no policy matched " +
                         view.node(pending).subject_name;
  return decision;
}

// ---------------------------------------------------------------------------
// Ask flow

std::string_view AskChoiceName(AskChoice choice) {
  switch (choice) {
    case AskChoice::kDisallow: return "disallow";
    case AskChoice::kAllowOnce: return "allow_once";
    case AskChoice::kAlwaysAllow: return "always_allow";
  }
  return "?";
}

std::optional<AskChoice> ParseAskChoice(std::string_view text) {
  std::string lower = internal::ToLower(text);
  if (lower == "disallow") return AskChoice::kDisallow;
  if (lower == "allow_once") return AskChoice::kAllowOnce;
  if (lower == "always_allow") return AskChoice::kAlwaysAllow;
  return std::nullopt;
}

Policy SynthesizeAllowPolicy(const Binding& binding, const SystemView& view) {
  Policy policy;
  policy.goal = Goal::kAllow;
  policy.origin = PolicyOrigin::kSynthesized;
  for (NodeId id : binding.path.nodes) {
    const NodeInstance& node = view.node(id);
    if (node.kind == SubjectKind::kUser) continue;
    policy.path.terms.push_back(NodeTerm::Named(node.kind, node.subject_name));
  }
  policy.source_text = RenderPolicy(policy);
  policy.description = "always allow " + RenderPath(policy.path);
  return policy;
}

AskOutcome ResolveAsk(const Decision& decision, AskChoice choice, const PolicyDB& db,
                      const SystemView& view) {
  AskOutcome outcome{Goal::kDeny, db, std::nullopt};
  switch (choice) {
    case AskChoice::kDisallow:
      break;
    case AskChoice::kAllowOnce:
      outcome.final = Goal::kAllow;
      break;
    case AskChoice::kAlwaysAllow:
      outcome.final = Goal::kAllow;
      if (decision.matched) {
        outcome.synthesized = SynthesizeAllowPolicy(decision.matched->binding, view);
        outcome.db = db.WithPolicy(*outcome.synthesized);
      }
      break;
  }
  return outcome;
}

nlohmann::json AskRequestToJson(const AskRequest& request) {
  nlohmann::json path = nlohmann::json::array();
  for (const auto& [name, kind] : request.path) {
    path.push_back({{"name", name}, {"kind", KindName(kind)}});
  }
  auto deadline_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         request.deadline.time_since_epoch())
                         .count();
  return {{"ask_id", request.ask_id},
          {"round_id", request.round_id},
          {"path", std::move(path)},
          {"policy_text", request.policy_text},
          {"explanation", request.explanation},
          {"deadline", deadline_ms}};
}

AskChoice AwaitAsk(AskResponder& responder, const AskRequest& request,
                   std::chrono::milliseconds timeout, bool* timed_out) {
  if (timed_out != nullptr) *timed_out = false;
  std::future<AskChoice> answer = responder.Ask(request);
  if (answer.wait_for(timeout) != std::future_status::ready) {
    if (timed_out != nullptr) *timed_out = true;
    return AskChoice::kDisallow;
  }
  try {
    return answer.get();
  } catch (const std::exception&) {
    // A responder that dies without answering counts as no answer.
    if (timed_out != nullptr) *timed_out = true;
    return AskChoice::kDisallow;
  }
}

std::future<AskChoice> ScriptedResponder::Ask(const AskRequest&) {
  std::promise<AskChoice> promise;
  {
    std::lock_guard lock(mu_);
    ++asked_;
    promise.set_value(next_ < answers_.size() ? answers_[next_++] : fallback_);
  }
  return promise.get_future();
}

void ScriptedResponder::Push(AskChoice choice) {
  std::lock_guard lock(mu_);
  answers_.push_back(choice);
}

size_t ScriptedResponder::asked() const {
  std::lock_guard lock(mu_);
  return asked_;
}

std::future<AskChoice> SilentResponder::Ask(const AskRequest&) {
  std::lock_guard lock(mu_);
  promises_.emplace_back();
  return promises_.back().get_future();
}

std::future<AskChoice> TerminalResponder::Ask(const AskRequest& request) {
  auto promise = std::make_shared<std::promise<AskChoice>>();
  std::future<AskChoice> future = promise->get_future();
  out_ << "\n[ask] " << request.explanation << "\n";
  if (!request.policy_text.empty()) out_ << request.policy_text;
  out_ << "  d) disallow (default)   o) allow once   a) always allow\n> " << std::flush;
  std::thread([promise, &in = in_]() {
    std::string line;
    AskChoice choice = AskChoice::kDisallow;
    if (std::getline(in, line)) {
      std::string answer = internal::ToLower(line);
      if (answer == "o" || answer == "allow_once") choice = AskChoice::kAllowOnce;
      if (answer == "a" || answer == "always_allow") choice = AskChoice::kAlwaysAllow;
    }
    promise->set_value(choice);
  }).detach();
  return future;
}

std::future<AskChoice> QueueResponder::Ask(const AskRequest& request) {
  std::lock_guard lock(mu_);
  Slot& slot = slots_[request.ask_id];
  slot.request = request;
  slot.promise = std::promise<AskChoice>();
  return slot.promise.get_future();
}

std::vector<AskRequest> QueueResponder::Pending() const {
  std::lock_guard lock(mu_);
  auto now = std::chrono::system_clock::now();
  std::vector<AskRequest> out;
  for (const auto& [id, slot] : slots_) {
    if (slot.request.deadline > now) out.push_back(slot.request);
  }
  return out;
}

bool QueueResponder::Answer(const std::string& ask_id, AskChoice choice) {
  std::lock_guard lock(mu_);
  auto it = slots_.find(ask_id);
  if (it == slots_.end() || it->second.request.deadline <= std::chrono::system_clock::now()) {
    return false;
  }
  it->second.promise.set_value(choice);
  slots_.erase(it);
  return true;
}

void QueueResponder::Expire(std::chrono::system_clock::time_point now) {
  std::lock_guard lock(mu_);
  std::erase_if(slots_, [&](const auto& entry) { return entry.second.request.deadline <= now; });
}

// ---------------------------------------------------------------------------
// Decision log

nlohmann::json DecisionRecord::ToJson() const {
  nlohmann::json out = {{"round_id", round_id},
                        {"pending_tool", pending_tool},
                        {"args", args.is_null() ? nlohmann::json::object() : args},
                        {"outcome", GoalName(outcome)},
                        {"path", path},
                        {"diagnostics", diagnostics}};
  if (ask_id) out["ask_id"] = *ask_id;
  if (final) out["final"] = GoalName(*final);
  if (choice) out["choice"] = AskChoiceName(*choice);
  if (timed_out) out["timed_out"] = true;
  if (policy_source_text) out["policy_source_text"] = *policy_source_text;
  if (synthesized_policy) out["synthesized_policy"] = *synthesized_policy;
  return out;
}

uint64_t DecisionLog::Append(DecisionRecord record) {
  std::lock_guard lock(mu_);
  records_.push_back(std::move(record));
  return records_.size();
}

std::vector<std::pair<uint64_t, DecisionRecord>> DecisionLog::Since(uint64_t seq) const {
  std::lock_guard lock(mu_);
  std::vector<std::pair<uint64_t, DecisionRecord>> out;
  for (size_t i = seq; i < records_.size(); ++i) out.emplace_back(i + 1, records_[i]);
  return out;
}

size_t DecisionLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::string DecisionLog::ToJsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const DecisionRecord& r : records_) {
    out += r.ToJson().dump();
    out += '\n';
  }
  return out;
}

}  // namespace agent_warden
