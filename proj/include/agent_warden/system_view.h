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

// The per-round information-flow graph. Users, agents and databases appear at
// most once per round; every tool invocation gets its own node so that
// arguments and the allow/deny outcome stay attached to one call.

#ifndef AGENT_WARDEN_SYSTEM_VIEW_H_
#define AGENT_WARDEN_SYSTEM_VIEW_H_

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agent_warden/labels.h"
#include "json.hpp"

namespace agent_warden {

// `round` is process-unique per view, so ids from different rounds never
// collide. `index` is the position within the round and is what exports show.
struct NodeId {
  uint64_t round = 0;
  uint32_t index = 0;
  auto operator<=>(const NodeId&) const = default;
};

enum class EdgeKind { kQuery, kInvoke, kReturn, kRetrieve, kMessage };

std::string_view EdgeKindName(EdgeKind kind);

enum class InvocationStatus { kPending, kAllowed, kDenied };

std::string_view InvocationStatusName(InvocationStatus status);

struct NodeInstance {
  NodeId id;
  std::string subject_name;
  SubjectKind kind = SubjectKind::kUser;
  // Empty attribute map for users.
  SubjectLabel label;
  // Tool invocations only: the call arguments, a JSON object whose leaves are
  // strings or nested objects.
  nlohmann::json args;
  int64_t created_seq = 0;
  InvocationStatus status = InvocationStatus::kPending;
  // Set on nodes re-introduced from memory at round start.
  bool seeded = false;
};

struct FlowEdge {
  NodeId from;
  NodeId to;
  EdgeKind kind = EdgeKind::kQuery;
  int64_t seq = 0;
  std::string message;  // MESSAGE edges only
};

// A simple walk whose edge seqs strictly increase. `seqs[i]` labels the edge
// nodes[i] -> nodes[i + 1], so seqs.size() == nodes.size() - 1.
struct FlowPath {
  std::vector<NodeId> nodes;
  std::vector<int64_t> seqs;
  bool operator==(const FlowPath&) const = default;
};

inline constexpr size_t kDefaultMaxPathLen = 8;

class SystemView {
 public:
  // V = {user, entry_agent}, E = {user -> entry_agent}. Users need no label;
  // the entry agent does (kUnlabeledSubject).
  static SystemView BeginRound(std::shared_ptr<const LabelSet> labels,
                               std::string user, std::string entry_agent);

  NodeId user_node() const { return nodes_[0].id; }
  NodeId entry_agent() const { return nodes_[1].id; }
  uint64_t round_serial() const { return round_; }
  const std::string& user_name() const { return nodes_[0].subject_name; }

  // Adds a fresh pending tool node and the INVOKE edge. Does not run the tool.
  // Throws kUnknownAgentNode, kUnlabeledSubject.
  NodeId RecordInvocation(NodeId agent, std::string_view tool, nlohmann::json args);

  // Gate outcome for a pending invocation. Throws kNotPending.
  void SetStatus(NodeId tool_node, InvocationStatus status);

  // Throws kNoMatchingInvoke (not a tool node), kBlockedInvocation (pending or
  // denied) or kDuplicateReturn.
  void RecordReturn(NodeId tool_node);

  // Reuses the db node on repeat retrievals. Throws kUnknownAgentNode,
  // kUnlabeledSubject.
  NodeId RecordRetrieval(std::string_view db, NodeId agent);

  // Creates the recipient node on first contact. Throws kUnknownAgentNode,
  // kUnlabeledSubject, kSelfMessage.
  NodeId RecordMessage(NodeId from, std::string_view to_agent, std::string message);

  // Re-introduces a remembered event's origin as a direct source of the entry
  // agent. Tool origins become an already-allowed tool node with a RETURN
  // edge, db origins a RETRIEVE edge; a user origin is the existing query
  // edge. Returns the origin node.
  NodeId AddSeedOrigin(SubjectKind kind, std::string_view name);

  bool Contains(NodeId id) const;
  // Throws kUnknownAgentNode for ids outside this view.
  const NodeInstance& node(NodeId id) const;
  const std::vector<NodeInstance>& nodes() const { return nodes_; }
  const std::vector<FlowEdge>& edges() const { return edges_; }

  // Tool nodes still awaiting a gate decision.
  std::vector<NodeId> PendingInvocations() const;

  // Every simple seq-monotone path of 2..max_len nodes that ends at `target`,
  // ordered by seq list.
  std::vector<FlowPath> PathsTo(NodeId target, size_t max_len = kDefaultMaxPathLen) const;

  // {"nodes":[{id,name,kind,labels,args?,status?,seeded?}],
  //  "edges":[{from,to,kind,seq,msg?}]}
  nlohmann::json Snapshot() const;

 private:
  SystemView() = default;

  NodeInstance& MutableNode(NodeId id);
  NodeId AddNode(std::string name, SubjectKind kind);
  std::optional<NodeId> FindSingleton(std::string_view name, SubjectKind kind) const;
  const NodeInstance& RequireAgent(NodeId id) const;
  void AddEdge(NodeId from, NodeId to, EdgeKind kind, std::string message = {});
  SubjectLabel LabelFor(std::string_view name, SubjectKind kind) const;

  std::shared_ptr<const LabelSet> labels_;
  uint64_t round_ = 0;
  int64_t next_seq_ = 1;
  std::vector<NodeInstance> nodes_;
  std::vector<FlowEdge> edges_;
};

}  // namespace agent_warden

#endif  // AGENT_WARDEN_SYSTEM_VIEW_H_
