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

#include <cctype>
#include <fstream>
#include <sstream>

#include "agent_warden/error.h"
#include "json.hpp"
#include "text_util.h"

namespace agent_warden {

using nlohmann::json;

namespace {

json EntryToJson(const EntityEntry& e) {
  return {{"key", e.key},
          {"origin", {{"kind", KindName(e.origin.kind)}, {"name", e.origin.name}}},
          {"content", e.content}};
}

void CheckOrigin(const Origin& origin) {
  if (origin.kind == SubjectKind::kAgent) {
    throw Error(ErrorCode::kBadOriginKind,
                "agent '" + origin.name + "' cannot be a memory origin");
  }
}

}  // namespace

uint64_t EntityDictionary::Append(Origin origin, std::string content) {
  CheckOrigin(origin);
  EntityEntry entry{entries_.size() + 1, std::move(content), std::move(origin)};
  if (journal_) {
    std::ofstream out(*journal_, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoError, "cannot append to " + journal_->string());
    out << EntryToJson(entry).dump() << '\n';
  }
  entries_.push_back(std::move(entry));
  return entries_.back().key;
}

const EntityEntry& EntityDictionary::At(uint64_t key) const {
  if (!Contains(key)) {
    throw Error(ErrorCode::kSelectorViolation,
                "key " + std::to_string(key) + " is not in the dictionary of " +
                    user_ + "/" + agent_);
  }
  return entries_[key - 1];
}

void EntityDictionary::AttachJournal(const std::filesystem::path& path) {
  if (std::filesystem::exists(path)) {
    std::istringstream lines(internal::ReadFile(path));
    std::string line;
    size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::kSchemaError,
                    path.string() + ":" + std::to_string(line_no) + ": " + why);
      };
      json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (!doc.is_object() || !doc.contains("key") || !doc.contains("origin") ||
          !doc.contains("content") || !doc["key"].is_number_unsigned() ||
          !doc["content"].is_string() || !doc["origin"].is_object()) {
        fail("malformed journal record");
      }
      if (doc["key"].get<uint64_t>() != entries_.size() + 1) fail("keys are not dense");
      const json& o = doc["origin"];
      std::optional<SubjectKind> kind;
      if (o.contains("kind") && o["kind"].is_string()) {
        kind = ParseKind(o["kind"].get<std::string>());
      }
      if (!kind || !o.contains("name") || !o["name"].is_string()) fail("bad origin");
      Origin origin{*kind, o["name"].get<std::string>()};
      CheckOrigin(origin);
      entries_.push_back({entries_.size() + 1, doc["content"].get<std::string>(),
                          std::move(origin)});
    }
  }
  journal_ = path;
}

std::string EntityDictionary::ToJournal() const {
  std::string out;
  for (const EntityEntry& e : entries_) {
    out += EntryToJson(e).dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Selectors

KeySet ScriptedSelector::Select(std::string_view query, const EntityDictionary&) {
  auto it = table_.find(query);
  return it == table_.end() ? KeySet{} : it->second;
}

KeySet AllSelector::Select(std::string_view, const EntityDictionary& dict) {
  KeySet keys;
  for (const EntityEntry& e : dict.entries()) keys.insert(e.key);
  return keys;
}

namespace {

std::set<std::string> Words(std::string_view text) {
  std::set<std::string> words;
  std::string current;
  auto flush = [&]() {
    if (current.size() >= 3) words.insert(current);
    current.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return words;
}

}  // namespace

KeySet KeywordSelector::Select(std::string_view query, const EntityDictionary& dict) {
  std::set<std::string> wanted = Words(query);
  KeySet keys;
  for (const EntityEntry& e : dict.entries()) {
    size_t overlap = 0;
    for (const std::string& w : Words(e.content)) overlap += wanted.count(w);
    if (overlap >= min_overlap_) keys.insert(e.key);
  }
  return keys;
}

std::string PromptedSelector::RenderHistory(const EntityDictionary& dict) {
  std::string out;
  for (const EntityEntry& e : dict.entries()) {
    out += "id " + std::to_string(e.key) + ": ";
    switch (e.origin.kind) {
      case SubjectKind::kUser:
        out += "user: ";
        break;
      case SubjectKind::kTool:
        out += "tool '" + e.origin.name + "': ";
        break;
      default:
        out += "db '" + e.origin.name + "': ";
        break;
    }
    out += e.content + "\n";
  }
  return out;
}

std::string PromptedSelector::RenderPrompt(std::string_view query,
                                           const EntityDictionary& dict) const {
  std::string prompt = template_;
  auto replace = [&prompt](std::string_view key, const std::string& value) {
    for (size_t at = prompt.find(key); at != std::string::npos;
         at = prompt.find(key, at + value.size())) {
      prompt.replace(at, key.size(), value);
    }
  };
  replace("{{history}}", RenderHistory(dict));
  replace("{{input}}", std::string(query));
  return prompt;
}

KeySet PromptedSelector::Select(std::string_view query, const EntityDictionary& dict) {
  std::string reply = complete_(RenderPrompt(query, dict));
  // Models often wrap the object in prose; take the outermost braces.
  size_t open = reply.find('{');
  size_t close = reply.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) return {};
  json doc = json::parse(reply.substr(open, close - open + 1), nullptr, false);
  KeySet keys;
  if (!doc.is_object() || !doc.contains("index") || !doc["index"].is_array()) return keys;
  for (const json& k : doc["index"]) {
    // Negative or fractional keys cannot name an entry; pass them through as
    // 0 so the contract check rejects the reply loudly.
    keys.insert(k.is_number_unsigned() ? k.get<uint64_t>() : 0);
  }
  return keys;
}

KeySet SelectContext(ContextSelector& selector, std::string_view query,
                     const EntityDictionary& dict) {
  KeySet keys = selector.Select(query, dict);
  for (uint64_t k : keys) {
    if (!dict.Contains(k)) {
      throw Error(ErrorCode::kSelectorViolation,
                  "selector returned key " + std::to_string(k) + " but the dictionary has " +
                      std::to_string(dict.size()) + " entries");
    }
  }
  return keys;
}

RoundSeed SeedRound(const KeySet& keys, const EntityDictionary& dict) {
  RoundSeed seed;
  for (uint64_t k : keys) {
    const EntityEntry& e = dict.At(k);
    seed.keys.push_back(k);
    seed.context.push_back(e.content);
    if (std::find(seed.origins.begin(), seed.origins.end(), e.origin) ==
        seed.origins.end()) {
      seed.origins.push_back(e.origin);
    }
  }
  return seed;
}

SystemView BeginSeededRound(std::shared_ptr<const LabelSet> labels, std::string user,
                            std::string agent, const RoundSeed& seed) {
  SystemView view = SystemView::BeginRound(std::move(labels), std::move(user),
                                           std::move(agent));
  for (const Origin& origin : seed.origins) {
    view.AddSeedOrigin(origin.kind, origin.name);
  }
  return view;
}

// ---------------------------------------------------------------------------
// Sessions

EntityDictionary& UserSession::Dictionary(const std::string& agent) {
  auto it = dictionaries_.find(agent);
  if (it == dictionaries_.end()) {
    it = dictionaries_.emplace(agent, EntityDictionary(user_, agent)).first;
    if (journal_dir_) {
      it->second.AttachJournal(*journal_dir_ / (user_ + "__" + agent + ".jsonl"));
    }
  }
  return it->second;
}

std::string UserSession::NextRoundId() {
  return user_ + "/" + std::to_string(++rounds_);
}

void EndRound(UserSession& session, const std::vector<MemoryEvent>& events) {
  std::optional<SystemView>& view = session.active_view();
  if (view && !view->PendingInvocations().empty()) {
    throw Error(ErrorCode::kPendingInvocation,
                "round still has " + std::to_string(view->PendingInvocations().size()) +
                    " undecided invocation(s)");
  }
  for (const MemoryEvent& event : events) CheckOrigin(event.origin);
  for (const MemoryEvent& event : events) {
    session.Dictionary(event.agent).Append(event.origin, event.content);
  }
  view.reset();
}

UserSession& SessionManager::SessionFor(const std::string& user) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(user);
  if (it == sessions_.end()) {
    auto session = std::make_unique<UserSession>(user, base_);
    if (journal_dir_) session->set_journal_dir(*journal_dir_);
    it = sessions_.emplace(user, std::move(session)).first;
  }
  return *it->second;
}

std::vector<std::string> SessionManager::users() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [user, session] : sessions_) out.push_back(user);
  return out;
}

}  // namespace agent_warden
