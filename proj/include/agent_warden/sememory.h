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

// Cross-round memory that keeps provenance. Each (user, agent) pair owns an
// append-only dictionary of past queries, tool returns and retrievals. At the
// start of a round a selector may only name keys of that dictionary; the
// chosen entries become the agent's context, and their origins are wired into
// the fresh System View as direct sources of the agent. Remembered content
// therefore carries the same flow edges it had when it first arrived.

#ifndef AGENT_WARDEN_SEMEMORY_H_
#define AGENT_WARDEN_SEMEMORY_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "agent_warden/decision_engine.h"
#include "agent_warden/labels.h"
#include "agent_warden/system_view.h"

namespace agent_warden {

struct Origin {
  SubjectKind kind = SubjectKind::kUser;
  std::string name;
  bool operator==(const Origin&) const = default;
};

struct EntityEntry {
  uint64_t key = 0;
  std::string content;
  Origin origin;
};

class EntityDictionary {
 public:
  EntityDictionary(std::string user, std::string agent)
      : user_(std::move(user)), agent_(std::move(agent)) {}

  // Key is size() + 1. Throws kBadOriginKind for agent origins. Writes through
  // to the journal when one is attached.
  uint64_t Append(Origin origin, std::string content);

  const std::vector<EntityEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool Contains(uint64_t key) const { return key >= 1 && key <= entries_.size(); }
  const EntityEntry& At(uint64_t key) const;
  const std::string& user() const { return user_; }
  const std::string& agent() const { return agent_; }

  // Replays the journal at `path` if it exists, then appends every later
  // entry to it. Throws kSchemaError on a malformed or non-dense journal.
  void AttachJournal(const std::filesystem::path& path);

  // One {"key","origin":{"kind","name"},"content"} object per line.
  std::string ToJournal() const;

 private:
  std::string user_;
  std::string agent_;
  std::vector<EntityEntry> entries_;
  std::optional<std::filesystem::path> journal_;
};

using KeySet = std::set<uint64_t>;

// Picks which remembered entries are relevant to a query. It sees the
// dictionary but can only answer with keys.
class ContextSelector {
 public:
  virtual ~ContextSelector() = default;
  virtual KeySet Select(std::string_view query, const EntityDictionary& dict) = 0;
};

// Exact query -> keys table; unknown queries select nothing.
class ScriptedSelector : public ContextSelector {
 public:
  explicit ScriptedSelector(std::map<std::string, KeySet> table = {})
      : table_(table.begin(), table.end()) {}
  KeySet Select(std::string_view query, const EntityDictionary& dict) override;

 private:
  std::map<std::string, KeySet, std::less<>> table_;
};

// Returns every key. Models an unfiltered shared transcript.
class AllSelector : public ContextSelector {
 public:
  KeySet Select(std::string_view query, const EntityDictionary& dict) override;
};

// Selects entries sharing at least `min_overlap` distinct words (three letters
// or more, case-folded) with the query.
class KeywordSelector : public ContextSelector {
 public:
  explicit KeywordSelector(size_t min_overlap = 1) : min_overlap_(min_overlap) {}
  KeySet Select(std::string_view query, const EntityDictionary& dict) override;

 private:
  size_t min_overlap_;
};

// Renders a prompt template (`{{history}}`, `{{input}}`) and hands it to a
// completion function, then reads {"index":[...]} from the reply. Replies
// that do not parse select nothing.
class PromptedSelector : public ContextSelector {
 public:
  using Completion = std::function<std::string(const std::string& prompt)>;
  PromptedSelector(std::string prompt_template, Completion complete)
      : template_(std::move(prompt_template)), complete_(std::move(complete)) {}
  KeySet Select(std::string_view query, const EntityDictionary& dict) override;

  static std::string RenderHistory(const EntityDictionary& dict);
  std::string RenderPrompt(std::string_view query, const EntityDictionary& dict) const;

 private:
  std::string template_;
  Completion complete_;
};

// Runs the selector and enforces the extractive contract: every returned key
// must exist in `dict` (kSelectorViolation otherwise).
KeySet SelectContext(ContextSelector& selector, std::string_view query,
                     const EntityDictionary& dict);

struct RoundSeed {
  std::vector<uint64_t> keys;          // ascending
  std::vector<std::string> context;    // contents, in key order
  std::vector<Origin> origins;         // distinct, first-seen in key order
};

// Throws kSelectorViolation if a key is not in `dict`.
RoundSeed SeedRound(const KeySet& keys, const EntityDictionary& dict);

// A round's System View started from a seed: the bare user -> agent view plus
// one edge into the agent from each selected origin.
SystemView BeginSeededRound(std::shared_ptr<const LabelSet> labels, std::string user,
                            std::string agent, const RoundSeed& seed);

// Something that happened in a round and is worth remembering: a query
// (user origin), an allowed tool return or a retrieval, received by `agent`.
struct MemoryEvent {
  std::string agent;
  Origin origin;
  std::string content;
};

// Per-user state. Nothing in one session refers to another.
class UserSession {
 public:
  UserSession(std::string user, PolicyDB policies)
      : user_(std::move(user)), policies_(std::move(policies)) {}

  const std::string& user() const { return user_; }
  EntityDictionary& Dictionary(const std::string& agent);
  const std::map<std::string, EntityDictionary>& dictionaries() const {
    return dictionaries_;
  }

  // Base pack plus anything synthesized from this user's answers.
  const PolicyDB& policies() const { return policies_; }
  void set_policies(PolicyDB db) { policies_ = std::move(db); }

  DecisionLog& log() { return log_; }
  const DecisionLog& log() const { return log_; }

  // Round ids are "<user>/<n>", n counting from 1.
  std::string NextRoundId();
  uint64_t rounds_started() const { return rounds_; }

  // Journals, when set, live at <dir>/<user>__<agent>.jsonl.
  void set_journal_dir(std::filesystem::path dir) { journal_dir_ = std::move(dir); }

  std::optional<SystemView>& active_view() { return view_; }

 private:
  std::string user_;
  PolicyDB policies_;
  std::map<std::string, EntityDictionary> dictionaries_;
  DecisionLog log_;
  uint64_t rounds_ = 0;
  std::optional<std::filesystem::path> journal_dir_;
  std::optional<SystemView> view_;
};

// Closes the session's active round: refuses while an invocation is still
// pending (kPendingInvocation), then appends `events` in order to the
// dictionaries of their receiving agents and discards the view.
void EndRound(UserSession& session, const std::vector<MemoryEvent>& events);

class SessionManager {
 public:
  explicit SessionManager(PolicyDB base_policies = {},
                          std::optional<std::filesystem::path> journal_dir = {})
      : base_(std::move(base_policies)), journal_dir_(std::move(journal_dir)) {}

  // Creates on first use. The reference stays valid for the manager's life.
  UserSession& SessionFor(const std::string& user);
  std::vector<std::string> users() const;

 private:
  mutable std::mutex mu_;
  PolicyDB base_;
  std::optional<std::filesystem::path> journal_dir_;
  std::map<std::string, std::unique_ptr<UserSession>> sessions_;
};

}  // namespace agent_warden

#endif  // AGENT_WARDEN_SEMEMORY_H_
