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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "agent_warden/decision_engine.h"
#include "agent_warden/error.h"
#include "agent_warden/harness.h"
#include "agent_warden/labels.h"
#include "agent_warden/policy.h"
#include "agent_warden/sememory.h"
#include "support/oracles.h"

namespace agent_warden {
namespace {

using testing::SourceDir;

// Collects the reasons a criterion failed.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    ok_ = ok_ && ok;
  }
  bool ok() const { return ok_; }
  std::string detail() const {
    std::string out;
    for (const std::string& f : failures_) out += (out.empty() ? "" : "; ") + f;
    return out;
  }
  void Note(std::string note) { note_ = std::move(note); }
  const std::string& note() const { return note_; }

 private:
  bool ok_ = true;
  std::vector<std::string> failures_;
  std::string note_;
};

std::string Fixed(double v, int digits = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

Scenario Load(const std::string& name) {
  return LoadScenario(SourceDir() / "scenarios" / (name + ".json"));
}

std::vector<Scenario> LoadAll() {
  std::vector<std::filesystem::path> paths;
  for (const auto& e : std::filesystem::directory_iterator(SourceDir() / "scenarios")) {
    if (e.path().extension() == ".json") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Scenario> out;
  for (const auto& p : paths) out.push_back(LoadScenario(p));
  return out;
}

void Kappa(Check& c) {
  std::filesystem::path human = SourceDir() / "data/injecagent_labels_human.json";
  std::filesystem::path llm = SourceDir() / "data/injecagent_labels_llm.json";
  KappaReport report = ComputeKappaReport(LabelSet::Load(human), LabelSet::Load(llm));
  const std::pair<Attribute, double> expected[] = {{Attribute::kObject, 1.0000},
                                                   {Attribute::kAction, 0.8884},
                                                   {Attribute::kSensitivity, 0.7670},
                                                   {Attribute::kPrivacy, 0.8723},
                                                   {Attribute::kIntegrity, 0.9217}};
  for (const auto& [attribute, value] : expected) {
    double got = report.per_attribute.at(attribute);
    c.Expect(std::abs(got - value) <= 1e-4,
             std::string(AttributeName(attribute)) + "=" + Fixed(got));
  }
  c.Expect(std::abs(report.overall - 0.9456) <= 1e-3, "overall=" + Fixed(report.overall));
  testing::KappaOracleResult oracle = testing::KappaOracle(human, llm);
  c.Expect(std::abs(oracle.pooled - report.overall) < 1e-12, "pooled disagrees with oracle");
  c.Note("overall " + Fixed(report.overall) + " over " + std::to_string(report.item_count) +
         " tools");
}

void DefenseSuite(Check& c) {
  const std::set<std::string> vectors = {"indirect_injection", "rag_poisoning",
                                         "confused_deputy", "untrusted_agent"};
  std::set<std::string> covered;
  int count = 0;
  for (const Scenario& s : LoadAll()) {
    if (!vectors.count(s.vector)) continue;
    ++count;
    covered.insert(s.vector);
    RunResult guarded = RunScenario(s);
    RunOptions naive_options;
    naive_options.mode = RunMode::kNaive;
    RunResult naive = RunScenario(s, naive_options);
    c.Expect(guarded.metrics.asr == 0.0, s.name + " guarded ASR " + Fixed(guarded.metrics.asr));
    c.Expect(guarded.metrics.par == 1.0, s.name + " guarded PAR " + Fixed(guarded.metrics.par));
    c.Expect(naive.metrics.asr == 1.0, s.name + " naive ASR " + Fixed(naive.metrics.asr));
    c.Expect(guarded.metrics.expectation_failures == 0, s.name + " expected decisions differ");
  }
  c.Expect(covered == vectors, "not every attack vector has a scenario");
  c.Note(std::to_string(count) + " attack scenarios");
}

void BenignSuite(Check& c) {
  int count = 0;
  bool trusted_chain = false;
  for (const Scenario& s : LoadAll()) {
    if (s.vector != "benign") continue;
    ++count;
    RunResult r = RunScenario(s);
    c.Expect(r.metrics.fpr == 0.0, s.name + " FPR " + Fixed(r.metrics.fpr));
    if (s.name == "benign_trusted_chain") {
      trusted_chain = true;
      // The upstream tool is TRUSTED, so the injection policy stays quiet
      // although the downstream call writes.
      for (const RoundTranscript& rt : r.transcript.rounds) {
        c.Expect(rt.decisions.size() == 2, "trusted chain should gate two calls");
        for (const DecisionRecord& d : rt.decisions) {
          c.Expect(d.outcome == Goal::kAllow && !d.policy_source_text,
                   "trusted chain matched a policy");
        }
      }
    }
  }
  c.Expect(count >= 3, "fewer than three benign scenarios");
  c.Expect(trusted_chain, "benign_trusted_chain missing");
  c.Note(std::to_string(count) + " benign scenarios");
}

void OracleEquivalence(Check& c) {
  std::mt19937_64 rng(20260101);
  int instances = 0, matched = 0;
  for (WildcardArity arity : {WildcardArity::kZeroOrMore, WildcardArity::kOneOrMore}) {
    for (int trial = 0; trial < 1000; ++trial) {
      testing::World world = testing::RandomWorld(rng);
      NodeId target;
      SystemView view = testing::RandomView(rng, world, 3 + trial % 6, &target);
      c.Expect(view.nodes().size() <= 8, "view larger than 8 nodes");
      std::vector<Policy> policies;
      size_t n = rng() % 7;
      for (size_t i = 0; i < n; ++i) policies.push_back(testing::RandomPolicy(rng, world, {}));
      Decision got = Decide(view, target, PolicyDB(policies), MatchOptions{arity});
      testing::OracleDecision want = testing::BruteForceDecide(view, target, policies, arity);
      std::optional<size_t> got_index;
      if (got.matched) got_index = got.matched->index;
      c.Expect(got.outcome == want.outcome && got_index == want.index,
               "instance " + std::to_string(instances) + " disagrees");
      matched += want.index.has_value();
      ++instances;
    }
  }
  c.Note(std::to_string(instances) + " instances, " + std::to_string(matched) +
         " matched a policy");
}

void ParserRoundTrip(Check& c) {
  std::mt19937_64 rng(7);
  testing::World world = testing::RandomWorld(rng);
  testing::PolicyGenOptions options;
  options.noisy_literals = true;
  int n = 0;
  for (; n < 1000; ++n) {
    Policy p = testing::RandomPolicy(rng, world, options);
    std::string text = RenderPolicy(p);
    try {
      Policy back = ParsePolicy(text);
      c.Expect(RenderPolicy(back) == text && StructurallyEqual(back, p), "not a fixpoint: " + text);
    } catch (const Error& e) {
      c.Expect(false, std::string(e.what()));
    }
  }
  std::vector<Policy> pack = LoadPolicyPack(SourceDir() / "policies/default.pol");
  c.Expect(pack.size() == 4, "default pack should hold four policies");
  for (const Policy& p : pack) {
    std::string once = RenderPolicy(p);
    std::string twice = RenderPolicy(ParsePolicy(once));
    c.Expect(once == twice && RenderPolicy(ParsePolicy(twice)) == once,
             "default policy not byte-stable");
  }
  c.Note(std::to_string(n) + " generated policies");
}

void DefaultAllowFirstMatch(Check& c) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    testing::World world = testing::RandomWorld(rng);
    NodeId target;
    SystemView view = testing::RandomView(rng, world, 8, &target);
    Decision d = Decide(view, target, PolicyDB());
    c.Expect(d.outcome == Goal::kAllow && !d.matched, "empty database did not allow");
  }

  // A generic DENY on a confused-deputy shaped flow; approve it once as
  // always-allow and replay the same flow.
  auto labels = std::make_shared<LabelSet>();
  labels->Add(ValidateLabel("web_agent", SubjectKind::kAgent, {{"integrity", "UNFILTERED"}}));
  labels->Add(ValidateLabel("lock_agent", SubjectKind::kAgent, {{"integrity", "TRUSTED"}}));
  labels->Add(ValidateLabel("unlock", SubjectKind::kTool,
                            {{"object", "PHYSICAL"},
                             {"action", "EXECUTE"},
                             {"sensitivity", "HIGH"},
                             {"integrity", "TRUSTED"},
                             {"privacy", "GENERAL"}}));
  auto flow = [&labels] {
    SystemView view = SystemView::BeginRound(labels, "alice", "web_agent");
    NodeId peer = view.RecordMessage(view.entry_agent(), "lock_agent", "please unlock");
    NodeId pending = view.RecordInvocation(peer, "unlock", nlohmann::json{{"door", "front"}});
    return std::make_pair(std::move(view), pending);
  };
  PolicyDB db({ParsePolicy("Goal ask\nPath agent:$A -> * -> tool:$B\n"
                           "Rule A.integrity==\"UNFILTERED\" AND B.sensitivity!=\"LOW\"\n"),
               ParsePolicy("Goal deny\nPath agent:$A -> * -> tool:$B\n"
                           "Rule A.integrity==\"UNFILTERED\"\n")});
  auto [view, pending] = flow();
  Decision first = Decide(view, pending, db);
  c.Expect(first.outcome == Goal::kAsk, "first decision should ask");
  AskOutcome approved = ResolveAsk(first, AskChoice::kAlwaysAllow, db, view);
  c.Expect(approved.synthesized.has_value(), "no policy synthesized");
  auto [replay, replay_pending] = flow();
  Decision second = Decide(replay, replay_pending, approved.db);
  c.Expect(second.outcome == Goal::kAllow && second.matched &&
               second.matched->policy.origin == PolicyOrigin::kSynthesized &&
               second.matched->index == 0,
           "replay was not allowed by the synthesized policy");
  // The same synthesized policy placed after the generic ones still wins.
  std::vector<Policy> reordered = {db.policies()[1], db.policies()[0], *approved.synthesized};
  Decision third = Decide(replay, replay_pending, PolicyDB(reordered));
  c.Expect(third.outcome == Goal::kAllow, "synthesized allow lost to a generic policy");
  c.Note("500 random views");
}

class RandomKeys : public ContextSelector {
 public:
  explicit RandomKeys(uint64_t seed) : rng_(seed) {}
  KeySet Select(std::string_view, const EntityDictionary& dict) override {
    KeySet keys;
    size_t n = rng_() % 6;
    for (size_t i = 0; i < n; ++i) keys.insert(rng_() % (dict.size() + 3));
    return keys;
  }

 private:
  std::mt19937_64 rng_;
};

void SememoryReduction(Check& c) {
  auto labels = std::make_shared<LabelSet>();
  labels->Add(ValidateLabel("assistant", SubjectKind::kAgent, {{"integrity", "TRUSTED"}}));
  labels->Add(ValidateLabel("search", SubjectKind::kTool,
                            {{"object", "EXTERNAL"},
                             {"action", "READ"},
                             {"sensitivity", "LOW"},
                             {"integrity", "UNFILTERED"},
                             {"privacy", "GENERAL"}}));
  labels->Add(ValidateLabel("notes", SubjectKind::kRagDb,
                            {{"integrity", "UNFILTERED"}, {"privacy", "GENERAL"}}));
  const std::vector<Origin> origins = {{SubjectKind::kUser, "alice"},
                                       {SubjectKind::kTool, "search"},
                                       {SubjectKind::kRagDb, "notes"}};
  std::mt19937_64 rng(5);
  int rejected = 0;
  for (uint64_t s = 0; s < 100; ++s) {
    EntityDictionary dict("alice", "assistant");
    size_t n = 1 + rng() % 8;
    for (size_t i = 0; i < n; ++i) dict.Append(origins[rng() % origins.size()], "m");
    RandomKeys selector(s);
    KeySet keys;
    try {
      keys = SelectContext(selector, "q", dict);
    } catch (const Error& e) {
      c.Expect(e.code() == ErrorCode::kSelectorViolation, "unexpected error");
      ++rejected;
      continue;
    }
    SystemView view = BeginSeededRound(labels, "alice", "assistant", SeedRound(keys, dict));
    std::set<std::string> allowed = {"alice"};
    for (uint64_t k : keys) allowed.insert(dict.At(k).origin.name);
    for (const FlowEdge& e : view.edges()) {
      c.Expect(e.to == view.entry_agent(), "seed edge does not end at the agent");
      c.Expect(allowed.count(view.node(e.from).subject_name) > 0, "seed edge from unselected origin");
    }
  }

  int scenarios = 0;
  for (const Scenario& s : LoadAll()) {
    std::set<std::string> users;
    std::map<std::string, int> per_user;
    for (const ScenarioRound& r : s.rounds) ++per_user[r.user];
    bool multi_round = std::any_of(per_user.begin(), per_user.end(),
                                   [](const auto& e) { return e.second > 1; });
    if (!multi_round) continue;
    ++scenarios;
    RunResult seeded = RunScenario(s);
    RunOptions flat_options;
    flat_options.flatten_memory = true;
    RunResult flat = RunScenario(s, flat_options);
    bool same = seeded.transcript.rounds.size() == flat.transcript.rounds.size();
    for (size_t i = 0; same && i < seeded.transcript.rounds.size(); ++i) {
      const auto& a = seeded.transcript.rounds[i].decisions;
      const auto& b = flat.transcript.rounds[i].decisions;
      same = a.size() == b.size();
      for (size_t k = 0; same && k < a.size(); ++k) {
        same = a[k].pending_tool == b[k].pending_tool && a[k].outcome == b[k].outcome &&
               a[k].Effective() == b[k].Effective() &&
               a[k].policy_source_text == b[k].policy_source_text;
      }
    }
    c.Expect(same, s.name + " seeded and flattened runs decide differently");
  }
  c.Expect(scenarios > 0, "no multi-round scenario shipped");
  c.Note("100 selectors (" + std::to_string(rejected) + " rejected), " +
         std::to_string(scenarios) + " multi-round scenarios");
}

void NonInterference(Check& c) {
  Scenario s = Load("direct_injection_multiuser");
  RunResult together = RunScenario(s);
  std::set<std::string> users;
  for (const ScenarioRound& r : s.rounds) users.insert(r.user);
  c.Expect(users.size() >= 2, "scenario needs two users");
  for (const std::string& user : users) {
    RunOptions alone;
    for (size_t i = 0; i < s.rounds.size(); ++i) {
      if (s.rounds[i].user == user) alone.round_order.push_back(i);
    }
    RunResult isolated = RunScenario(s, alone);
    c.Expect(together.transcript.user_logs.count(user) &&
                 together.transcript.user_logs.at(user) == isolated.transcript.user_logs.at(user),
             user + " log differs");
  }
  c.Note(std::to_string(users.size()) + " users");
}

void FailClosedAsk(Check& c) {
  Scenario s = Load("confused_deputy");
  RunOptions options;
  options.policies = PolicyDB(LoadPolicyPack(SourceDir() / "policies/ask_variant.pol"));
  SilentResponder silent;
  options.responder = &silent;
  options.ask_timeout = std::chrono::seconds(1);
  RunResult r = RunScenario(s, options);
  int asks = 0;
  for (const RoundTranscript& rt : r.transcript.rounds) {
    for (const DecisionRecord& d : rt.decisions) {
      if (d.outcome != Goal::kAsk) continue;
      ++asks;
      c.Expect(d.final == Goal::kDeny && d.timed_out, "ask was not denied on timeout");
      // No RETURN edge leaves the denied tool node.
      for (const nlohmann::json& node : rt.view["nodes"]) {
        if (node["name"] != d.pending_tool) continue;
        c.Expect(node["status"] == "denied", "tool node not denied");
        for (const nlohmann::json& edge : rt.view["edges"]) {
          c.Expect(!(edge["from"] == node["id"] && edge["kind"] == "RETURN"),
                   "denied tool returned");
        }
      }
    }
  }
  c.Expect(asks > 0, "no ASK decision was reached");
  c.Expect(r.metrics.executed_violations == 0, "violation executed");
  c.Note(std::to_string(asks) + " ask(s) denied after 1 s");
}

struct Criterion {
  const char* name;
  std::function<void(Check&)> run;
  double budget_s;
};

}  // namespace
}  // namespace agent_warden

int main() {
  using namespace agent_warden;
  const Criterion criteria[] = {
      {"kappa reproduction", Kappa, 1.0},
      {"default-pack defense suite", DefenseSuite, 5.0},
      {"benign suite", BenignSuite, 5.0},
      {"engine oracle equivalence", OracleEquivalence, 60.0},
      {"parser round-trip", ParserRoundTrip, 60.0},
      {"default-allow and first-match", DefaultAllowFirstMatch, 60.0},
      {"sememory reduction invariant", SememoryReduction, 60.0},
      {"non-interference", NonInterference, 60.0},
      {"fail-closed ask", FailClosedAsk, 10.0},
  };
  int failed = 0;
  for (const Criterion& criterion : criteria) {
    Check check;
    auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.Expect(false, std::string("exception: ") + e.what());
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.Expect(seconds < criterion.budget_s,
                 "took " + Fixed(seconds, 2) + " s, budget " + Fixed(criterion.budget_s, 0) + " s");
    if (!check.ok()) ++failed;
    std::cout << (check.ok() ? "PASS" : "FAIL") << "  " << std::left << std::setw(32)
              << criterion.name << std::right << std::setw(9) << Fixed(seconds, 3) << " s  "
              << (check.ok() ? check.note() : check.detail()) << "\n";
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " failed") << "\n";
  return failed == 0 ? 0 : 1;
}
