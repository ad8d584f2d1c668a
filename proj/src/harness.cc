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

#include "agent_warden/harness.h"

#include <algorithm>
#include <initializer_list>
#include <set>

#include "agent_warden/error.h"
#include "text_util.h"

namespace agent_warden {

using nlohmann::json;

std::string_view TopologyName(Topology topology) {
  switch (topology) {
    case Topology::kSingle: return "SINGLE";
    case Topology::kMasBroadcast: return "MAS_BROADCAST";
    case Topology::kMasP2P: return "MAS_P2P";
  }
  return "?";
}

std::string_view RunModeName(RunMode mode) {
  return mode == RunMode::kNaive ? "naive" : "guarded";
}

const ScriptedAgent* Scenario::FindAgent(std::string_view name) const {
  for (const ScriptedAgent& a : agents) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

namespace {

// Argument values as the policy engine sees them: strings as-is, other
// scalars in their JSON spelling.
std::optional<std::string> ScalarText(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_primitive() && !value.is_null()) return value.dump();
  return std::nullopt;
}

bool ArgsContain(const json& call, const json& wanted) {
  if (!wanted.is_object()) return false;
  for (const auto& [key, value] : wanted.items()) {
    if (!call.is_object() || !call.contains(key) || call[key] != value) return false;
  }
  return true;
}

}  // namespace

std::string ScriptedTool::Lookup(const json& args) const {
  for (const Return& r : returns) {
    if (ArgsContain(args, r.args)) return r.result;
  }
  return default_return;
}

std::string ScriptedRag::Lookup(const std::string& query) const {
  for (const Retrieval& r : retrievals) {
    if (query.find(r.query) != std::string::npos) return r.result;
  }
  return default_result;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

class SchemaReader {
 public:
  explicit SchemaReader(std::string where) : where_(std::move(where)) {}

  [[noreturn]] void Fail(const std::string& what) const {
    throw Error(ErrorCode::kSchemaError, where_ + ": " + what);
  }

  void Keys(const json& obj, std::initializer_list<std::string_view> allowed) const {
    if (!obj.is_object()) Fail("expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        Fail("unknown key '" + key + "'");
      }
    }
  }

  std::string String(const json& obj, const char* key,
                     std::optional<std::string> fallback = std::nullopt) const {
    if (!obj.contains(key)) {
      if (fallback) return *fallback;
      Fail(std::string("missing '") + key + "'");
    }
    if (!obj[key].is_string()) Fail(std::string("'") + key + "' must be a string");
    return obj[key].get<std::string>();
  }

  bool Bool(const json& obj, const char* key) const {
    if (!obj.contains(key)) return false;
    if (!obj[key].is_boolean()) Fail(std::string("'") + key + "' must be true or false");
    return obj[key].get<bool>();
  }

  const json& Array(const json& obj, const char* key) const {
    static const json kEmpty = json::array();
    if (!obj.contains(key)) return kEmpty;
    if (!obj[key].is_array()) Fail(std::string("'") + key + "' must be a list");
    return obj[key];
  }

  SchemaReader At(const std::string& suffix) const { return SchemaReader(where_ + suffix); }

 private:
  std::string where_;
};

std::map<std::string, std::string> RawLabels(const SchemaReader& r, const json& obj) {
  if (!obj.contains("labels")) {
    throw Error(ErrorCode::kUnlabeledSubject, "subject has no 'labels'");
  }
  if (!obj["labels"].is_object()) r.Fail("'labels' must be an object");
  std::map<std::string, std::string> raw;
  for (const auto& [key, value] : obj["labels"].items()) {
    if (!value.is_string()) r.Fail("label '" + key + "' must be a string");
    raw[key] = value.get<std::string>();
  }
  return raw;
}

std::shared_ptr<const PortableRegex> CompileShared(const std::string& pattern) {
  return std::make_shared<const PortableRegex>(PortableRegex::Compile(pattern));
}

AgentAction ParseAction(const SchemaReader& r, const json& obj) {
  AgentAction action;
  static constexpr std::pair<std::string_view, AgentAction::Type> kKinds[] = {
      {"invoke", AgentAction::Type::kInvoke},
      {"message", AgentAction::Type::kMessage},
      {"broadcast", AgentAction::Type::kBroadcast},
      {"retrieve", AgentAction::Type::kRetrieve},
      {"reply", AgentAction::Type::kReply},
  };
  int found = 0;
  for (const auto& [key, type] : kKinds) {
    if (obj.is_object() && obj.contains(key)) {
      ++found;
      action.type = type;
    }
  }
  if (found != 1) r.Fail("an action needs exactly one of invoke/message/broadcast/retrieve/reply");
  switch (action.type) {
    case AgentAction::Type::kInvoke:
      r.Keys(obj, {"invoke", "args"});
      action.target = r.String(obj, "invoke");
      if (obj.contains("args")) {
        if (!obj["args"].is_object()) r.Fail("'args' must be an object");
        action.args = obj["args"];
      }
      break;
    case AgentAction::Type::kMessage:
      r.Keys(obj, {"message", "text"});
      action.target = r.String(obj, "message");
      action.text = r.String(obj, "text");
      break;
    case AgentAction::Type::kBroadcast:
      r.Keys(obj, {"broadcast"});
      action.text = r.String(obj, "broadcast");
      break;
    case AgentAction::Type::kRetrieve:
      r.Keys(obj, {"retrieve", "query"});
      action.target = r.String(obj, "retrieve");
      action.text = r.String(obj, "query", "");
      break;
    case AgentAction::Type::kReply:
      r.Keys(obj, {"reply"});
      action.text = r.String(obj, "reply");
      break;
  }
  return action;
}

Oracle ParseOracle(const SchemaReader& r, const json& obj) {
  Oracle oracle;
  r.Keys(obj, {"invocations", "messages"});
  for (const json& inv : r.Array(obj, "invocations")) {
    r.Keys(inv, {"tool", "args_pattern"});
    OracleInvocation sig;
    sig.tool = r.String(inv, "tool");
    if (inv.contains("args_pattern")) {
      if (!inv["args_pattern"].is_object()) r.Fail("'args_pattern' must be an object");
      for (const auto& [key, pattern] : inv["args_pattern"].items()) {
        if (!pattern.is_string()) r.Fail("argument patterns must be strings");
        sig.args_pattern[key] = CompileShared(pattern.get<std::string>());
      }
    }
    oracle.invocations.push_back(std::move(sig));
  }
  if (obj.contains("messages")) {
    oracle.messages.emplace();
    for (const json& m : r.Array(obj, "messages")) {
      r.Keys(m, {"from", "to"});
      oracle.messages->emplace_back(r.String(m, "from"), r.String(m, "to"));
    }
  }
  return oracle;
}

Goal ParseGoalName(const SchemaReader& r, const json& value) {
  if (!value.is_string()) r.Fail("decisions must be strings");
  std::string text = internal::ToLower(value.get<std::string>());
  if (text == "allow") return Goal::kAllow;
  if (text == "deny") return Goal::kDeny;
  if (text == "ask") return Goal::kAsk;
  r.Fail("unknown decision '" + text + "'");
}

void Dangling(const std::string& what) {
  throw Error(ErrorCode::kDanglingReference, what);
}

}  // namespace

Scenario ParseScenario(const json& doc, const std::filesystem::path& base_dir) {
  SchemaReader r("scenario");
  r.Keys(doc, {"name", "description", "vector", "topology", "policy_pack", "entry_agent",
               "selector", "subjects", "rounds"});
  Scenario s;
  s.name = r.String(doc, "name");
  r = r.At(" '" + s.name + "'");
  s.description = r.String(doc, "description", "");
  s.vector = r.String(doc, "vector", "benign");
  static const std::set<std::string> kVectors = {
      "direct_injection", "indirect_injection", "rag_poisoning",
      "confused_deputy",  "untrusted_agent",    "benign"};
  if (!kVectors.contains(s.vector)) r.Fail("unknown vector '" + s.vector + "'");

  std::string topology = r.String(doc, "topology", "SINGLE");
  if (topology == "SINGLE") {
    s.topology = Topology::kSingle;
  } else if (topology == "MAS_BROADCAST") {
    s.topology = Topology::kMasBroadcast;
  } else if (topology == "MAS_P2P") {
    s.topology = Topology::kMasP2P;
  } else {
    r.Fail("unknown topology '" + topology + "'");
  }
  if (doc.contains("policy_pack")) {
    std::filesystem::path pack = r.String(doc, "policy_pack");
    s.policy_pack = pack.is_absolute() ? pack : (base_dir / pack).lexically_normal();
  }

  // Subjects and their labels.
  if (!doc.contains("subjects")) r.Fail("missing 'subjects'");
  const json& subjects = doc["subjects"];
  r.At(".subjects").Keys(subjects, {"agents", "tools", "dbs"});
  auto labels = std::make_shared<LabelSet>();

  for (const json& t : r.Array(subjects, "tools")) {
    SchemaReader tr = r.At(".tools");
    tr.Keys(t, {"name", "labels", "returns", "default_return"});
    ScriptedTool tool;
    tool.name = tr.String(t, "name");
    tr = r.At(".tools['" + tool.name + "']");
    labels->Add(ValidateLabel(tool.name, SubjectKind::kTool, RawLabels(tr, t)));
    for (const json& ret : tr.Array(t, "returns")) {
      tr.Keys(ret, {"args", "result"});
      ScriptedTool::Return entry;
      entry.args = ret.contains("args") ? ret["args"] : json::object();
      if (!entry.args.is_object()) tr.Fail("'args' must be an object");
      entry.result = tr.String(ret, "result");
      tool.returns.push_back(std::move(entry));
    }
    tool.default_return = tr.String(t, "default_return", "ok");
    if (s.tools.contains(tool.name)) tr.Fail("duplicate tool");
    s.tools.emplace(tool.name, std::move(tool));
  }

  for (const json& d : r.Array(subjects, "dbs")) {
    SchemaReader dr = r.At(".dbs");
    dr.Keys(d, {"name", "labels", "retrievals", "default"});
    ScriptedRag db;
    db.name = dr.String(d, "name");
    dr = r.At(".dbs['" + db.name + "']");
    labels->Add(ValidateLabel(db.name, SubjectKind::kRagDb, RawLabels(dr, d)));
    for (const json& ret : dr.Array(d, "retrievals")) {
      dr.Keys(ret, {"query", "result"});
      db.retrievals.push_back({dr.String(ret, "query", ""), dr.String(ret, "result")});
    }
    db.default_result = dr.String(d, "default", "");
    if (s.dbs.contains(db.name)) dr.Fail("duplicate db");
    s.dbs.emplace(db.name, std::move(db));
  }

  for (const json& a : r.Array(subjects, "agents")) {
    SchemaReader ar = r.At(".agents");
    ar.Keys(a, {"name", "labels", "tools", "rules", "fallback"});
    ScriptedAgent agent;
    agent.name = ar.String(a, "name");
    ar = r.At(".agents['" + agent.name + "']");
    labels->Add(ValidateLabel(agent.name, SubjectKind::kAgent, RawLabels(ar, a)));
    for (const json& tool : ar.Array(a, "tools")) {
      if (!tool.is_string()) ar.Fail("'tools' must list tool names");
      if (!s.tools.contains(tool.get<std::string>())) {
        Dangling(agent.name + " lists unknown tool '" + tool.get<std::string>() + "'");
      }
    }
    for (const json& rule_doc : ar.Array(a, "rules")) {
      ar.Keys(rule_doc, {"trigger", "trigger_regex", "source", "emit"});
      ReactionRule rule;
      if (rule_doc.contains("trigger")) rule.trigger = ar.String(rule_doc, "trigger");
      if (rule_doc.contains("trigger_regex")) {
        rule.trigger_regex = CompileShared(ar.String(rule_doc, "trigger_regex"));
      }
      if (rule_doc.contains("source")) rule.source = ar.String(rule_doc, "source");
      for (const json& action : ar.Array(rule_doc, "emit")) {
        rule.emit.push_back(ParseAction(ar, action));
      }
      agent.rules.push_back(std::move(rule));
    }
    agent.fallback = ar.String(a, "fallback", "Done.");
    if (s.FindAgent(agent.name) != nullptr) ar.Fail("duplicate agent");
    s.agents.push_back(std::move(agent));
  }

  // Cross references.
  for (const ScriptedAgent& agent : s.agents) {
    for (const ReactionRule& rule : agent.rules) {
      if (rule.source && *rule.source != "user" && labels->Find(*rule.source) == nullptr) {
        Dangling(agent.name + " reacts to unknown source '" + *rule.source + "'");
      }
      for (const AgentAction& action : rule.emit) {
        switch (action.type) {
          case AgentAction::Type::kInvoke:
            if (!s.tools.contains(action.target)) {
              Dangling(agent.name + " invokes unknown tool '" + action.target + "'");
            }
            break;
          case AgentAction::Type::kMessage:
            if (s.topology == Topology::kSingle) r.Fail("messages need a MAS topology");
            if (s.FindAgent(action.target) == nullptr) {
              Dangling(agent.name + " messages unknown agent '" + action.target + "'");
            }
            if (action.target == agent.name) {
              throw Error(ErrorCode::kSelfMessage, agent.name + " messages itself");
            }
            break;
          case AgentAction::Type::kBroadcast:
            if (s.topology != Topology::kMasBroadcast) {
              r.Fail("broadcasts need the MAS_BROADCAST topology");
            }
            break;
          case AgentAction::Type::kRetrieve:
            if (!s.dbs.contains(action.target)) {
              Dangling(agent.name + " retrieves from unknown db '" + action.target + "'");
            }
            break;
          case AgentAction::Type::kReply:
            break;
        }
      }
    }
  }

  s.entry_agent = r.String(doc, "entry_agent",
                           s.agents.empty() ? std::string() : s.agents.front().name);
  if (s.FindAgent(s.entry_agent) == nullptr) {
    throw Error(ErrorCode::kUnlabeledSubject, "entry agent '" + s.entry_agent + "' is not defined");
  }

  if (doc.contains("selector")) {
    SchemaReader sr = r.At(".selector");
    const json& sel = doc["selector"];
    sr.Keys(sel, {"kind", "table", "min_overlap"});
    std::string kind = sr.String(sel, "kind", "scripted");
    if (kind == "scripted") {
      s.selector.kind = SelectorSpec::Kind::kScripted;
    } else if (kind == "keyword") {
      s.selector.kind = SelectorSpec::Kind::kKeyword;
    } else if (kind == "all") {
      s.selector.kind = SelectorSpec::Kind::kAll;
    } else {
      sr.Fail("unknown selector kind '" + kind + "'");
    }
    if (sel.contains("table")) {
      if (!sel["table"].is_object()) sr.Fail("'table' must map queries to key lists");
      for (const auto& [query, keys] : sel["table"].items()) {
        if (!keys.is_array()) sr.Fail("'table' values must be key lists");
        KeySet set;
        for (const json& k : keys) {
          if (!k.is_number_unsigned()) sr.Fail("keys must be positive integers");
          set.insert(k.get<uint64_t>());
        }
        s.selector.table[query] = std::move(set);
      }
    }
    if (sel.contains("min_overlap")) {
      if (!sel["min_overlap"].is_number_unsigned()) sr.Fail("'min_overlap' must be a count");
      s.selector.min_overlap = sel["min_overlap"].get<size_t>();
    }
  }

  size_t index = 0;
  for (const json& round_doc : r.Array(doc, "rounds")) {
    SchemaReader rr = r.At(".rounds[" + std::to_string(index++) + "]");
    rr.Keys(round_doc, {"user", "query", "adversarial", "setup", "ask", "oracle", "expect"});
    ScenarioRound round;
    round.user = rr.String(round_doc, "user");
    round.query = rr.String(round_doc, "query");
    round.adversarial = rr.Bool(round_doc, "adversarial");
    round.setup = rr.Bool(round_doc, "setup");
    for (const json& choice : rr.Array(round_doc, "ask")) {
      std::optional<AskChoice> parsed;
      if (choice.is_string()) parsed = ParseAskChoice(choice.get<std::string>());
      if (!parsed) rr.Fail("'ask' entries are disallow, allow_once or always_allow");
      round.ask.push_back(*parsed);
    }
    if (round_doc.contains("oracle")) {
      round.oracle = ParseOracle(rr.At(".oracle"), round_doc["oracle"]);
    }
    for (const OracleInvocation& sig : round.oracle.invocations) {
      if (!s.tools.contains(sig.tool)) Dangling("oracle names unknown tool '" + sig.tool + "'");
    }
    if (round.oracle.messages) {
      for (const auto& [from, to] : *round.oracle.messages) {
        if (s.FindAgent(from) == nullptr || s.FindAgent(to) == nullptr) {
          Dangling("oracle message " + from + " -> " + to + " names an unknown agent");
        }
      }
    }
    if (round_doc.contains("expect")) {
      SchemaReader er = rr.At(".expect");
      er.Keys(round_doc["expect"], {"decisions"});
      std::vector<Goal> goals;
      for (const json& g : er.Array(round_doc["expect"], "decisions")) {
        goals.push_back(ParseGoalName(er, g));
      }
      round.expect_decisions = std::move(goals);
    }
    s.rounds.push_back(std::move(round));
  }
  s.labels = std::move(labels);
  return s;
}

Scenario LoadScenario(const std::filesystem::path& path) {
  json doc = json::parse(internal::ReadFile(path), nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::kSchemaError, path.string() + ": not valid JSON");
  }
  return ParseScenario(doc, path.parent_path());
}

// ---------------------------------------------------------------------------
// Running

namespace {

struct Input {
  std::string agent;
  NodeId node;
  std::string source;
  std::string text;
};

struct Queued {
  std::string agent;
  NodeId node;
  const AgentAction* action;
  NodeId tool_node;  // invocations, after phase 1
  bool allowed = false;
};

const AgentAction kFallbackReply{};

const std::vector<AgentAction>* React(const ScriptedAgent& agent, const Input& input) {
  for (const ReactionRule& rule : agent.rules) {
    if (rule.source && *rule.source != input.source) continue;
    if (rule.trigger && input.text.find(*rule.trigger) == std::string::npos) continue;
    if (rule.trigger_regex && !rule.trigger_regex->Search(input.text)) continue;
    return &rule.emit;
  }
  return nullptr;
}

std::unique_ptr<ContextSelector> MakeSelector(const SelectorSpec& spec, RunMode mode) {
  // The unguarded baseline keeps one transcript for everybody and feeds all
  // of it back.
  if (mode == RunMode::kNaive || spec.kind == SelectorSpec::Kind::kAll) {
    return std::make_unique<AllSelector>();
  }
  if (spec.kind == SelectorSpec::Kind::kKeyword) {
    return std::make_unique<KeywordSelector>(spec.min_overlap);
  }
  return std::make_unique<ScriptedSelector>(spec.table);
}

class RoundRunner {
 public:
  RoundRunner(const Scenario& scenario, const RunOptions& options, UserSession& session,
              RoundTranscript& out)
      : s_(scenario), opt_(options), session_(session), out_(out) {}

  void Run(ContextSelector& selector) {
    const ScenarioRound& round = s_.rounds[out_.index];
    EntityDictionary& dict = session_.Dictionary(s_.entry_agent);
    RoundSeed seed = SeedRound(SelectContext(selector, round.query, dict), dict);
    out_.context = seed.context;

    if (opt_.flatten_memory) {
      session_.active_view() = SystemView::BeginRound(s_.labels, round.user, s_.entry_agent);
      view_ = &*session_.active_view();
      for (uint64_t key : seed.keys) Replay(dict.At(key));
    } else {
      session_.active_view() =
          BeginSeededRound(s_.labels, round.user, s_.entry_agent, seed);
      view_ = &*session_.active_view();
    }
    scripted_.emplace(round.ask, AskChoice::kDisallow);

    memory_.push_back({s_.entry_agent, {SubjectKind::kUser, round.user}, round.query});
    std::string first_text;
    for (const std::string& c : seed.context) first_text += c + "\n";
    first_text += round.query;
    std::vector<Input> batch{{s_.entry_agent, view_->entry_agent(), "user", first_text}};

    size_t transitions = 0;
    while (!batch.empty()) {
      if (++transitions > opt_.max_transitions) {
        throw Error(ErrorCode::kNonTermination,
                    out_.round_id + " exceeded " + std::to_string(opt_.max_transitions) +
                        " transitions");
      }
      batch = Step(batch);
      Notify();
    }
    out_.view = view_->Snapshot();
    EndRound(session_, memory_);
  }

 private:
  void Notify() {
    if (opt_.observer != nullptr) opt_.observer->OnView(out_.round_id, *view_);
  }

  // Flattened memory: the remembered event happens again, ungated, at the
  // start of the round.
  void Replay(const EntityEntry& entry) {
    switch (entry.origin.kind) {
      case SubjectKind::kTool: {
        NodeId t = view_->RecordInvocation(view_->entry_agent(), entry.origin.name,
                                           json::object());
        view_->SetStatus(t, InvocationStatus::kAllowed);
        view_->RecordReturn(t);
        break;
      }
      case SubjectKind::kRagDb:
        view_->RecordRetrieval(entry.origin.name, view_->entry_agent());
        break;
      default:
        break;
    }
  }

  std::vector<Input> Step(const std::vector<Input>& batch) {
    std::vector<Queued> queue;
    for (const Input& input : batch) {
      const ScriptedAgent& agent = *s_.FindAgent(input.agent);
      const std::vector<AgentAction>* emit = React(agent, input);
      if (emit == nullptr) {
        out_.events.push_back({TranscriptEvent::Type::kReply, agent.name, "", json::object(),
                               agent.fallback, false});
        continue;
      }
      for (const AgentAction& action : *emit) {
        queue.push_back({agent.name, input.node, &action, {}, false});
      }
    }

    // Phase 1: record and gate every requested call.
    for (Queued& q : queue) {
      if (q.action->type != AgentAction::Type::kInvoke) continue;
      q.tool_node = view_->RecordInvocation(q.node, q.action->target, q.action->args);
      q.allowed = Gate(q.tool_node);
      view_->SetStatus(q.tool_node, q.allowed ? InvocationStatus::kAllowed
                                              : InvocationStatus::kDenied);
      out_.events.push_back({TranscriptEvent::Type::kInvoke, q.agent, q.action->target,
                             q.action->args, "", q.allowed});
    }

    // Phase 2: deliveries, in generation order.
    std::vector<Input> next;
    for (Queued& q : queue) {
      const AgentAction& action = *q.action;
      switch (action.type) {
        case AgentAction::Type::kInvoke: {
          if (!q.allowed) break;
          view_->RecordReturn(q.tool_node);
          std::string result = s_.tools.at(action.target).Lookup(action.args);
          out_.events.push_back({TranscriptEvent::Type::kReturn, q.agent, action.target,
                                 action.args, result, true});
          memory_.push_back({q.agent, {SubjectKind::kTool, action.target}, result});
          next.push_back({q.agent, q.node, action.target, std::move(result)});
          break;
        }
        case AgentAction::Type::kMessage:
          Deliver(q, action.target, action.text, next);
          break;
        case AgentAction::Type::kBroadcast:
          for (const ScriptedAgent& peer : s_.agents) {
            if (peer.name != q.agent) Deliver(q, peer.name, action.text, next);
          }
          break;
        case AgentAction::Type::kRetrieve: {
          view_->RecordRetrieval(action.target, q.node);
          std::string result = s_.dbs.at(action.target).Lookup(action.text);
          out_.events.push_back({TranscriptEvent::Type::kRetrieve, q.agent, action.target,
                                 json::object(), result, true});
          memory_.push_back({q.agent, {SubjectKind::kRagDb, action.target}, result});
          next.push_back({q.agent, q.node, action.target, std::move(result)});
          break;
        }
        case AgentAction::Type::kReply:
          out_.events.push_back({TranscriptEvent::Type::kReply, q.agent, "", json::object(),
                                 action.text, false});
          break;
      }
    }
    return next;
  }

  void Deliver(const Queued& q, const std::string& to, const std::string& text,
               std::vector<Input>& next) {
    NodeId to_node = view_->RecordMessage(q.node, to, text);
    out_.events.push_back(
        {TranscriptEvent::Type::kMessage, q.agent, to, json::object(), text, true});
    next.push_back({to, to_node, q.agent, text});
  }

  bool Gate(NodeId pending) {
    if (opt_.mode == RunMode::kNaive) return true;
    const NodeInstance& call = view_->node(pending);
    Decision decision = Decide(*view_, pending, session_.policies(), opt_.match);

    DecisionRecord record;
    record.round_id = out_.round_id;
    record.pending_tool = call.subject_name;
    record.args = call.args;
    record.outcome = decision.outcome;
    for (const Diagnostic& d : decision.diagnostics) {
      record.diagnostics.push_back(std::string(DiagnosticName(d.code)) + ": " + d.message);
    }
    if (decision.matched) {
      record.path = PathNames(*view_, decision.matched->binding.path);
      const Policy& p = decision.matched->policy;
      record.policy_source_text = p.source_text.empty() ? RenderPolicy(p) : p.source_text;
    }

    if (decision.outcome == Goal::kAsk) {
      Notify();
      AskRequest request;
      request.ask_id = out_.round_id + "#" + std::to_string(++asks_);
      request.round_id = out_.round_id;
      for (NodeId id : decision.matched->binding.path.nodes) {
        const NodeInstance& n = view_->node(id);
        request.path.emplace_back(n.subject_name, n.kind);
      }
      request.policy_text = *record.policy_source_text;
      request.explanation = decision.explanation;
      request.deadline = std::chrono::system_clock::now() + opt_.ask_timeout;
      AskResponder& responder = opt_.responder != nullptr ? *opt_.responder : *scripted_;
      bool timed_out = false;
      AskChoice choice = AwaitAsk(responder, request, opt_.ask_timeout, &timed_out);
      AskOutcome resolved = ResolveAsk(decision, choice, session_.policies(), *view_);
      session_.set_policies(resolved.db);
      record.ask_id = request.ask_id;
      record.final = resolved.final;
      record.choice = choice;
      record.timed_out = timed_out;
      if (resolved.synthesized) record.synthesized_policy = RenderPolicy(*resolved.synthesized);
    }

    session_.log().Append(record);
    if (opt_.observer != nullptr) opt_.observer->OnDecision(record);
    bool allowed = record.Effective() == Goal::kAllow;
    out_.decisions.push_back(std::move(record));
    return allowed;
  }

  const Scenario& s_;
  const RunOptions& opt_;
  UserSession& session_;
  RoundTranscript& out_;
  SystemView* view_ = nullptr;
  std::optional<ScriptedResponder> scripted_;
  std::vector<MemoryEvent> memory_;
  size_t asks_ = 0;
};

}  // namespace

RunResult RunScenario(const Scenario& scenario, const RunOptions& options) {
  PolicyDB base;
  if (options.policies) {
    base = *options.policies;
  } else if (!scenario.policy_pack.empty()) {
    base = PolicyDB(LoadPolicyPack(scenario.policy_pack, PolicyOrigin::kUserFile));
  } else if (options.mode == RunMode::kGuarded) {
    throw Error(ErrorCode::kSchemaError,
                "scenario '" + scenario.name + "' has no policy pack for guarded mode");
  }

  SessionManager sessions(base);
  std::unique_ptr<ContextSelector> selector = MakeSelector(scenario.selector, options.mode);
  std::map<std::string, uint64_t> round_counts;

  std::vector<size_t> order = options.round_order;
  if (order.empty()) {
    for (size_t i = 0; i < scenario.rounds.size(); ++i) order.push_back(i);
  }

  RunResult result;
  result.transcript.scenario = scenario.name;
  result.transcript.mode = options.mode;
  for (size_t index : order) {
    const ScenarioRound& round = scenario.rounds.at(index);
    RoundTranscript rt;
    rt.index = index;
    rt.round_id = round.user + "/" + std::to_string(++round_counts[round.user]);
    rt.user = round.user;
    rt.query = round.query;
    rt.adversarial = round.adversarial;
    rt.setup = round.setup;
    UserSession& session =
        sessions.SessionFor(options.mode == RunMode::kNaive ? std::string("*") : round.user);
    RoundRunner(scenario, options, session, rt).Run(*selector);
    result.transcript.rounds.push_back(std::move(rt));
  }
  if (options.mode == RunMode::kGuarded) {
    for (const std::string& user : sessions.users()) {
      result.transcript.user_logs[user] = sessions.SessionFor(user).log().ToJsonl();
    }
  }
  result.violations = EscalationOracle(result.transcript, scenario);
  result.metrics = ComputeMetrics({&result.transcript}, {&scenario});
  return result;
}

// ---------------------------------------------------------------------------
// Oracle and metrics

namespace {

bool Permitted(const OracleInvocation& sig, const TranscriptEvent& call) {
  if (sig.tool != call.subject) return false;
  for (const auto& [key, pattern] : sig.args_pattern) {
    if (!call.args.is_object() || !call.args.contains(key)) return false;
    std::optional<std::string> value = ScalarText(call.args[key]);
    if (!value || !pattern->Search(*value)) return false;
  }
  return true;
}

bool Permitted(const Oracle& oracle, const TranscriptEvent& call) {
  return std::any_of(oracle.invocations.begin(), oracle.invocations.end(),
                     [&](const OracleInvocation& sig) { return Permitted(sig, call); });
}

std::string_view EventTypeName(TranscriptEvent::Type type) {
  switch (type) {
    case TranscriptEvent::Type::kInvoke: return "invoke";
    case TranscriptEvent::Type::kReturn: return "return";
    case TranscriptEvent::Type::kMessage: return "message";
    case TranscriptEvent::Type::kRetrieve: return "retrieve";
    case TranscriptEvent::Type::kReply: return "reply";
  }
  return "?";
}

double Ratio(size_t num, size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<Violation> EscalationOracle(const Transcript& transcript,
                                        const Scenario& scenario) {
  std::vector<Violation> out;
  for (const RoundTranscript& rt : transcript.rounds) {
    const Oracle& oracle = scenario.rounds.at(rt.index).oracle;
    for (const TranscriptEvent& e : rt.events) {
      if (e.type == TranscriptEvent::Type::kInvoke && !Permitted(oracle, e)) {
        out.push_back({rt.round_id, false, e.agent, e.subject, e.args, e.executed});
      }
      if (e.type == TranscriptEvent::Type::kMessage && oracle.messages) {
        bool allowed = std::find(oracle.messages->begin(), oracle.messages->end(),
                                 std::make_pair(e.agent, e.subject)) !=
                       oracle.messages->end();
        if (!allowed) {
          out.push_back({rt.round_id, true, e.agent, e.subject, json::object(), true});
        }
      }
    }
  }
  return out;
}

Metrics ComputeMetrics(const std::vector<const Transcript*>& transcripts,
                       const std::vector<const Scenario*>& scenarios) {
  Metrics m;
  size_t successes = 0, activations = 0, false_positives = 0, correct = 0;
  for (size_t i = 0; i < transcripts.size(); ++i) {
    const Transcript& t = *transcripts[i];
    const Scenario& s = *scenarios.at(i);
    std::vector<Violation> violations = EscalationOracle(t, s);
    for (const RoundTranscript& rt : t.rounds) {
      if (rt.setup) continue;
      const ScenarioRound& round = s.rounds.at(rt.index);
      bool fired = std::any_of(rt.decisions.begin(), rt.decisions.end(),
                               [](const DecisionRecord& d) { return d.outcome != Goal::kAllow; });
      bool executed_violation = false;
      for (const Violation& v : violations) {
        if (v.round_id != rt.round_id || v.message) continue;
        if (v.executed) {
          executed_violation = true;
          ++m.executed_violations;
        } else {
          ++m.attempted_violations;
        }
      }
      if (rt.adversarial) {
        ++m.attack_rounds;
        successes += executed_violation;
        activations += fired;
      } else {
        ++m.benign_rounds;
        false_positives += fired;
      }
      // Correct: every executed call is permitted and every permitted
      // signature was exercised.
      bool exact = !executed_violation;
      for (const OracleInvocation& sig : round.oracle.invocations) {
        bool seen = std::any_of(rt.events.begin(), rt.events.end(), [&](const TranscriptEvent& e) {
          return e.type == TranscriptEvent::Type::kInvoke && e.executed && Permitted(sig, e);
        });
        exact = exact && seen;
      }
      correct += exact;
      if (t.mode == RunMode::kGuarded && round.expect_decisions) {
        std::vector<Goal> got;
        for (const DecisionRecord& d : rt.decisions) got.push_back(d.outcome);
        if (got != *round.expect_decisions) ++m.expectation_failures;
      }
    }
  }
  m.asr = Ratio(successes, m.attack_rounds);
  m.par = Ratio(activations, m.attack_rounds);
  m.fpr = Ratio(false_positives, m.benign_rounds);
  m.correctness = Ratio(correct, m.attack_rounds + m.benign_rounds);
  return m;
}

json Metrics::ToJson() const {
  return {{"attack_rounds", attack_rounds},
          {"benign_rounds", benign_rounds},
          {"asr", asr},
          {"par", par},
          {"fpr", fpr},
          {"correctness", correctness},
          {"attempted_violations", attempted_violations},
          {"executed_violations", executed_violations},
          {"expectation_failures", expectation_failures}};
}

json Transcript::ToJson() const {
  json rounds_json = json::array();
  for (const RoundTranscript& rt : rounds) {
    json events = json::array();
    for (const TranscriptEvent& e : rt.events) {
      json ev = {{"type", EventTypeName(e.type)}, {"agent", e.agent}};
      if (!e.subject.empty()) ev["subject"] = e.subject;
      if (e.type == TranscriptEvent::Type::kInvoke || e.type == TranscriptEvent::Type::kReturn) {
        ev["args"] = e.args;
      }
      if (e.type == TranscriptEvent::Type::kInvoke) {
        ev["executed"] = e.executed;
      } else {
        ev["text"] = e.text;
      }
      events.push_back(std::move(ev));
    }
    json decisions = json::array();
    for (const DecisionRecord& d : rt.decisions) decisions.push_back(d.ToJson());
    rounds_json.push_back({{"round_id", rt.round_id},
                           {"user", rt.user},
                           {"query", rt.query},
                           {"adversarial", rt.adversarial},
                           {"setup", rt.setup},
                           {"context", rt.context},
                           {"events", std::move(events)},
                           {"decisions", std::move(decisions)},
                           {"view", rt.view}});
  }
  return {{"scenario", scenario},
          {"mode", RunModeName(mode)},
          {"rounds", std::move(rounds_json)},
          {"user_logs", user_logs}};
}

}  // namespace agent_warden
