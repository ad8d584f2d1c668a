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

// A deterministic multi-agent world for exercising the monitor. Agents are
// scripted: each incoming piece of content is tested against the agent's
// reaction rules and the first matching rule emits tool calls, messages,
// retrievals or a reply. A payload "compromises" an agent exactly when it
// matches one of those triggers, so every attack is an inspectable property
// of the scenario file.
//
// One round runs as a sequence of transitions. In each transition every
// delivered input is reacted to; then all newly requested tool calls are
// recorded and gated, and finally, in the order they were generated, allowed
// calls return, messages are delivered and retrievals happen. Their results
// form the next transition's inputs. The round ends when nothing new is
// generated.

#ifndef AGENT_WARDEN_HARNESS_H_
#define AGENT_WARDEN_HARNESS_H_

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agent_warden/decision_engine.h"
#include "agent_warden/labels.h"
#include "agent_warden/regex.h"
#include "agent_warden/sememory.h"
#include "json.hpp"

namespace agent_warden {

enum class Topology { kSingle, kMasBroadcast, kMasP2P };

std::string_view TopologyName(Topology topology);

struct AgentAction {
  enum class Type { kInvoke, kMessage, kBroadcast, kRetrieve, kReply };
  Type type = Type::kReply;
  std::string target;  // tool, recipient agent or db
  nlohmann::json args = nlohmann::json::object();
  std::string text;    // message/broadcast/reply text, or retrieval query
};

struct ReactionRule {
  // Both optional. A rule with neither trigger matches any input.
  std::optional<std::string> trigger;              // substring
  std::shared_ptr<const PortableRegex> trigger_regex;
  // Restricts the rule to inputs from one subject: "user", or a tool, agent
  // or db name.
  std::optional<std::string> source;
  std::vector<AgentAction> emit;
};

struct ScriptedAgent {
  std::string name;
  std::vector<ReactionRule> rules;
  std::string fallback = "Done.";
};

struct ScriptedTool {
  struct Return {
    nlohmann::json args;  // matched as a subset of the call's arguments
    std::string result;
  };
  std::string name;
  std::vector<Return> returns;
  std::string default_return = "ok";

  std::string Lookup(const nlohmann::json& args) const;
};

struct ScriptedRag {
  struct Retrieval {
    std::string query;  // substring of the retrieval query
    std::string result;
  };
  std::string name;
  std::vector<Retrieval> retrievals;
  std::string default_result;

  std::string Lookup(const std::string& query) const;
};

struct OracleInvocation {
  std::string tool;
  // Argument name -> regex the value must contain a match for.
  std::map<std::string, std::shared_ptr<const PortableRegex>> args_pattern;
};

struct Oracle {
  std::vector<OracleInvocation> invocations;
  // Absent: messages are not constrained.
  std::optional<std::vector<std::pair<std::string, std::string>>> messages;
};

struct ScenarioRound {
  std::string user;
  std::string query;
  bool adversarial = false;
  // Setup rounds prepare state (for example plant a payload) and are left
  // out of metrics.
  bool setup = false;
  // Scripted answers for ASK decisions in this round, in order.
  std::vector<AskChoice> ask;
  Oracle oracle;
  // Expected raw decision outcomes of the gated calls, in GUARDED mode.
  std::optional<std::vector<Goal>> expect_decisions;
};

struct SelectorSpec {
  enum class Kind { kScripted, kKeyword, kAll };
  Kind kind = Kind::kScripted;
  std::map<std::string, KeySet> table;
  size_t min_overlap = 1;
};

struct Scenario {
  std::string name;
  std::string description;
  // "direct_injection", "indirect_injection", "rag_poisoning",
  // "confused_deputy", "untrusted_agent" or "benign".
  std::string vector;
  Topology topology = Topology::kSingle;
  std::filesystem::path policy_pack;  // absolute once loaded; may be empty
  std::string entry_agent;
  SelectorSpec selector;
  std::shared_ptr<const LabelSet> labels;
  std::vector<ScriptedAgent> agents;  // declaration order drives broadcasts
  std::map<std::string, ScriptedTool> tools;
  std::map<std::string, ScriptedRag> dbs;
  std::vector<ScenarioRound> rounds;

  const ScriptedAgent* FindAgent(std::string_view name) const;
};

// Throws kSchemaError (unknown or malformed keys), kUnlabeledSubject,
// kDanglingReference, or label validation errors. `policy_pack` is resolved
// against `base_dir`.
Scenario ParseScenario(const nlohmann::json& doc,
                       const std::filesystem::path& base_dir = {});
Scenario LoadScenario(const std::filesystem::path& path);

enum class RunMode { kNaive, kGuarded };

std::string_view RunModeName(RunMode mode);

// Receives live state while a scenario runs; used by the serve endpoint.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void OnView(const std::string& /*round_id*/, const SystemView& /*view*/) {}
  virtual void OnDecision(const DecisionRecord& /*record*/) {}
};

struct RunOptions {
  RunMode mode = RunMode::kGuarded;
  // Replaces the scenario's pack when set.
  std::optional<PolicyDB> policies;
  MatchOptions match;
  // When null, each round answers ASKs from its scripted `ask` list and then
  // disallows.
  AskResponder* responder = nullptr;
  std::chrono::milliseconds ask_timeout{120000};
  size_t max_transitions = 32;
  // Instead of seeding remembered origins as edges, replay the remembered
  // events themselves at the start of the round.
  bool flatten_memory = false;
  // Run only these round indices, in this order. Empty: all, in file order.
  std::vector<size_t> round_order;
  RunObserver* observer = nullptr;
};

struct TranscriptEvent {
  enum class Type { kInvoke, kReturn, kMessage, kRetrieve, kReply };
  Type type = Type::kReply;
  std::string agent;    // acting or receiving agent
  std::string subject;  // tool, peer agent or db
  nlohmann::json args = nlohmann::json::object();
  std::string text;     // result, message or reply text
  bool executed = false;  // invocations: passed the gate
};

struct RoundTranscript {
  size_t index = 0;  // position in the scenario
  std::string round_id;
  std::string user;
  std::string query;
  bool adversarial = false;
  bool setup = false;
  std::vector<std::string> context;
  std::vector<TranscriptEvent> events;
  std::vector<DecisionRecord> decisions;
  nlohmann::json view;
};

struct Transcript {
  std::string scenario;
  RunMode mode = RunMode::kGuarded;
  std::vector<RoundTranscript> rounds;
  // Per-user decision log, one JSON record per line.
  std::map<std::string, std::string> user_logs;

  nlohmann::json ToJson() const;
};

struct Violation {
  std::string round_id;
  bool message = false;  // inter-agent message rather than tool call
  std::string agent;
  std::string subject;
  nlohmann::json args = nlohmann::json::object();
  bool executed = false;
};

std::vector<Violation> EscalationOracle(const Transcript& transcript,
                                        const Scenario& scenario);

struct Metrics {
  size_t attack_rounds = 0;
  size_t benign_rounds = 0;
  double asr = 0.0;
  double par = 0.0;
  double fpr = 0.0;
  double correctness = 0.0;
  size_t attempted_violations = 0;
  size_t executed_violations = 0;
  size_t expectation_failures = 0;

  nlohmann::json ToJson() const;
};

Metrics ComputeMetrics(const std::vector<const Transcript*>& transcripts,
                       const std::vector<const Scenario*>& scenarios);

struct RunResult {
  Transcript transcript;
  Metrics metrics;
  std::vector<Violation> violations;
};

// Throws kNonTermination, plus any error from the layers below.
RunResult RunScenario(const Scenario& scenario, const RunOptions& options = {});

}  // namespace agent_warden

#endif  // AGENT_WARDEN_HARNESS_H_
