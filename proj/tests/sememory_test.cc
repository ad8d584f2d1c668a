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

#include "agent_warden/sememory.h"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "agent_warden/error.h"
#include "support/oracles.h"

namespace agent_warden {
namespace {

using nlohmann::json;

std::shared_ptr<LabelSet> HomeLabels() {
  auto labels = std::make_shared<LabelSet>();
  labels->Add(ValidateLabel("assistant", SubjectKind::kAgent, {{"integrity", "TRUSTED"}}));
  labels->Add(ValidateLabel("web_search", SubjectKind::kTool,
                            {{"object", "EXTERNAL"},
                             {"action", "READ"},
                             {"sensitivity", "LOW"},
                             {"integrity", "UNFILTERED"},
                             {"privacy", "GENERAL"}}));
  labels->Add(ValidateLabel("pay", SubjectKind::kTool,
                            {{"object", "EXTERNAL"},
                             {"action", "WRITE"},
                             {"sensitivity", "HIGH"},
                             {"integrity", "TRUSTED"},
                             {"privacy", "PERSONAL"}}));
  labels->Add(ValidateLabel("wiki", SubjectKind::kRagDb,
                            {{"integrity", "UNFILTERED"}, {"privacy", "GENERAL"}}));
  return labels;
}

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kIoError;
}

EntityDictionary SampleDictionary() {
  EntityDictionary dict("alice", "assistant");
  dict.Append({SubjectKind::kUser, "alice"}, "Find cheap flights to Lisbon");
  dict.Append({SubjectKind::kTool, "web_search"}, "Flights to Lisbon from 80 EUR");
  dict.Append({SubjectKind::kRagDb, "wiki"}, "Lisbon is the capital of Portugal");
  dict.Append({SubjectKind::kTool, "web_search"}, "Weather in Oslo: rain");
  return dict;
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("warden_sememory_" + std::to_string(std::random_device()()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

TEST(EntityDictionaryTest, DenseKeysAndOriginCheck) {
  EntityDictionary dict = SampleDictionary();
  EXPECT_EQ(dict.size(), 4u);
  EXPECT_TRUE(dict.Contains(1));
  EXPECT_TRUE(dict.Contains(4));
  EXPECT_FALSE(dict.Contains(0));
  EXPECT_FALSE(dict.Contains(5));
  EXPECT_EQ(dict.At(3).origin, (Origin{SubjectKind::kRagDb, "wiki"}));
  EXPECT_EQ(CodeOf([&] { dict.Append({SubjectKind::kAgent, "assistant"}, "x"); }),
            ErrorCode::kBadOriginKind);
  EXPECT_EQ(dict.size(), 4u);
}

TEST(EntityDictionaryTest, JournalRoundTrip) {
  TempDir dir;
  std::filesystem::path file = dir.path() / "alice__assistant.jsonl";
  {
    EntityDictionary dict("alice", "assistant");
    dict.AttachJournal(file);
    dict.Append({SubjectKind::kUser, "alice"}, "hello \"quoted\"\nline");
    dict.Append({SubjectKind::kTool, "web_search"}, "result");
  }
  EntityDictionary restored("alice", "assistant");
  restored.AttachJournal(file);
  ASSERT_EQ(restored.size(), 2u);
  EXPECT_EQ(restored.At(1).content, "hello \"quoted\"\nline");
  EXPECT_EQ(restored.At(2).origin.name, "web_search");
  restored.Append({SubjectKind::kRagDb, "wiki"}, "third");

  EntityDictionary again("alice", "assistant");
  again.AttachJournal(file);
  EXPECT_EQ(again.size(), 3u);
  EXPECT_EQ(again.ToJournal(), restored.ToJournal());
}

TEST(EntityDictionaryTest, BadJournalsAreRejected) {
  TempDir dir;
  auto attach = [&](const std::string& body) {
    std::filesystem::path file = dir.path() / "j.jsonl";
    std::ofstream(file) << body;
    EntityDictionary dict("alice", "assistant");
    return CodeOf([&] { dict.AttachJournal(file); });
  };
  EXPECT_EQ(attach("not json\n"), ErrorCode::kSchemaError);
  EXPECT_EQ(attach(R"({"key":2,"origin":{"kind":"user","name":"a"},"content":"x"})"
                   "\n"),
            ErrorCode::kSchemaError);
  EXPECT_EQ(attach(R"({"key":1,"origin":{"kind":"agent","name":"a"},"content":"x"})"
                   "\n"),
            ErrorCode::kBadOriginKind);
}

TEST(SelectorTest, Scripted) {
  EntityDictionary dict = SampleDictionary();
  ScriptedSelector selector({{"book it", {2}}});
  EXPECT_EQ(SelectContext(selector, "book it", dict), (KeySet{2}));
  EXPECT_TRUE(SelectContext(selector, "other", dict).empty());
  ScriptedSelector liar({{"book it", {9}}});
  EXPECT_EQ(CodeOf([&] { SelectContext(liar, "book it", dict); }),
            ErrorCode::kSelectorViolation);
}

TEST(SelectorTest, AllAndKeyword) {
  EntityDictionary dict = SampleDictionary();
  AllSelector all;
  EXPECT_EQ(SelectContext(all, "anything", dict), (KeySet{1, 2, 3, 4}));
  KeywordSelector one;
  EXPECT_EQ(SelectContext(one, "LISBON hotels", dict), (KeySet{1, 2, 3}));
  KeywordSelector two(2);
  EXPECT_EQ(SelectContext(two, "flights to lisbon", dict), (KeySet{1, 2}));
  EXPECT_TRUE(SelectContext(one, "", dict).empty());
}

TEST(SelectorTest, PromptedUsesShippedTemplate) {
  std::ifstream in(testing::SourceDir() / "prompts/sememory_llm.txt");
  std::string tmpl((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ASSERT_FALSE(tmpl.empty());
  EntityDictionary dict = SampleDictionary();
  std::string seen;
  PromptedSelector selector(tmpl, [&](const std::string& prompt) {
    seen = prompt;
    return std::string("Sure! {\n\"index\":[2, 3]\n}");
  });
  EXPECT_EQ(SelectContext(selector, "Book the Lisbon flight", dict), (KeySet{2, 3}));
  EXPECT_NE(seen.find("id 2: tool 'web_search': Flights to Lisbon"), std::string::npos);
  EXPECT_NE(seen.find("Book the Lisbon flight"), std::string::npos);
  EXPECT_EQ(seen.find("{{history}}"), std::string::npos);

  PromptedSelector garbage(tmpl, [](const std::string&) { return std::string("no idea"); });
  EXPECT_TRUE(SelectContext(garbage, "q", dict).empty());
  PromptedSelector negative(tmpl, [](const std::string&) { return std::string("{\"index\":[-1]}"); });
  EXPECT_EQ(CodeOf([&] { SelectContext(negative, "q", dict); }), ErrorCode::kSelectorViolation);
}

TEST(SeedTest, OriginsBecomeDirectSources) {
  EntityDictionary dict = SampleDictionary();
  RoundSeed seed = SeedRound({4, 2, 1}, dict);
  EXPECT_EQ(seed.keys, (std::vector<uint64_t>{1, 2, 4}));
  EXPECT_EQ(seed.context[1], "Flights to Lisbon from 80 EUR");
  // web_search appears twice but is one origin.
  ASSERT_EQ(seed.origins.size(), 2u);
  SystemView view = BeginSeededRound(HomeLabels(), "alice", "assistant", seed);
  // user -> agent plus one RETURN edge from the web_search origin.
  ASSERT_EQ(view.edges().size(), 2u);
  EXPECT_EQ(view.edges()[1].kind, EdgeKind::kReturn);
  EXPECT_EQ(view.node(view.edges()[1].from).subject_name, "web_search");
  EXPECT_EQ(CodeOf([&] { SeedRound({5}, dict); }), ErrorCode::kSelectorViolation);
}

// A selector that returns arbitrary keys, including ones that do not exist.
class AdversarialSelector : public ContextSelector {
 public:
  explicit AdversarialSelector(uint64_t seed) : rng_(seed) {}
  KeySet Select(std::string_view, const EntityDictionary& dict) override {
    KeySet keys;
    size_t n = rng_() % 6;
    for (size_t i = 0; i < n; ++i) keys.insert(rng_() % (dict.size() + 4));
    return keys;
  }

 private:
  std::mt19937_64 rng_;
};

TEST(SeedTest, AdversarialSelectorsCannotForgeEdges) {
  std::mt19937_64 rng(7);
  const std::vector<Origin> origins = {{SubjectKind::kUser, "alice"},
                                       {SubjectKind::kTool, "web_search"},
                                       {SubjectKind::kTool, "pay"},
                                       {SubjectKind::kRagDb, "wiki"}};
  int accepted = 0, rejected = 0;
  for (uint64_t s = 0; s < 100; ++s) {
    EntityDictionary dict("alice", "assistant");
    size_t n = 1 + rng() % 8;
    for (size_t i = 0; i < n; ++i) dict.Append(origins[rng() % origins.size()], "c" + std::to_string(i));
    AdversarialSelector selector(s);
    KeySet keys;
    try {
      keys = SelectContext(selector, "q", dict);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kSelectorViolation);
      ++rejected;
      continue;
    }
    ++accepted;
    SystemView view = BeginSeededRound(HomeLabels(), "alice", "assistant", SeedRound(keys, dict));
    // Every edge into the agent comes from the user or from the origin of a
    // selected entry, and every selected non-user origin has such an edge.
    std::set<std::string> expected;
    for (uint64_t k : keys) {
      if (dict.At(k).origin.kind != SubjectKind::kUser) expected.insert(dict.At(k).origin.name);
    }
    std::set<std::string> sources;
    for (const FlowEdge& e : view.edges()) {
      EXPECT_EQ(e.to, view.entry_agent());
      if (e.from != view.user_node()) sources.insert(view.node(e.from).subject_name);
    }
    EXPECT_EQ(sources, expected) << "seed " << s;
    EXPECT_EQ(view.edges().size(), expected.size() + 1);
  }
  EXPECT_GT(accepted, 10);
  EXPECT_GT(rejected, 10);
}

TEST(SessionTest, RoundIdsAndEndRound) {
  SessionManager manager(PolicyDB({ParsePolicy("Goal deny\nPath tool:pay\n")}));
  UserSession& alice = manager.SessionFor("alice");
  UserSession& bob = manager.SessionFor("bob");
  EXPECT_EQ(&manager.SessionFor("alice"), &alice);
  EXPECT_EQ(manager.users(), (std::vector<std::string>{"alice", "bob"}));
  EXPECT_EQ(alice.NextRoundId(), "alice/1");
  EXPECT_EQ(alice.NextRoundId(), "alice/2");
  EXPECT_EQ(bob.NextRoundId(), "bob/1");
  EXPECT_EQ(alice.policies().size(), 1u);

  alice.active_view() = SystemView::BeginRound(HomeLabels(), "alice", "assistant");
  alice.active_view()->RecordInvocation(alice.active_view()->entry_agent(), "pay", json::object());
  std::vector<MemoryEvent> events = {{"assistant", {SubjectKind::kUser, "alice"}, "pay rent"}};
  EXPECT_EQ(CodeOf([&] { EndRound(alice, events); }), ErrorCode::kPendingInvocation);
  EXPECT_TRUE(alice.Dictionary("assistant").entries().empty());
  alice.active_view()->SetStatus(alice.active_view()->PendingInvocations()[0],
                                 InvocationStatus::kDenied);
  EndRound(alice, events);
  EXPECT_FALSE(alice.active_view().has_value());
  EXPECT_EQ(alice.Dictionary("assistant").size(), 1u);
  EXPECT_TRUE(bob.Dictionary("assistant").entries().empty());

  // An invalid origin anywhere in the batch leaves the dictionary untouched.
  std::vector<MemoryEvent> bad = {{"assistant", {SubjectKind::kUser, "alice"}, "ok"},
                                  {"assistant", {SubjectKind::kAgent, "x"}, "bad"}};
  EXPECT_EQ(CodeOf([&] { EndRound(alice, bad); }), ErrorCode::kBadOriginKind);
  EXPECT_EQ(alice.Dictionary("assistant").size(), 1u);
}

TEST(SessionTest, JournalDirectory) {
  TempDir dir;
  {
    SessionManager manager({}, dir.path());
    EndRound(manager.SessionFor("alice"),
             {{"assistant", {SubjectKind::kTool, "web_search"}, "remember me"}});
  }
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "alice__assistant.jsonl"));
  SessionManager reopened({}, dir.path());
  EXPECT_EQ(reopened.SessionFor("alice").Dictionary("assistant").size(), 1u);
}

}  // namespace
}  // namespace agent_warden
