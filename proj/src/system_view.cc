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

#include "agent_warden/system_view.h"

#include <algorithm>
#include <atomic>
#include <limits>

#include "agent_warden/error.h"

namespace agent_warden {

namespace {

std::atomic<uint64_t> next_round_serial{1};

std::string Describe(NodeId id) {
  return "node " + std::to_string(id.round) + ":" + std::to_string(id.index);
}

}  // namespace

std::string_view EdgeKindName(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::kQuery: return "QUERY";
    case EdgeKind::kInvoke: return "INVOKE";
    case EdgeKind::kReturn: return "RETURN";
    case EdgeKind::kRetrieve: return "RETRIEVE";
    case EdgeKind::kMessage: return "MESSAGE";
  }
  return "?";
}

std::string_view InvocationStatusName(InvocationStatus status) {
  switch (status) {
    case InvocationStatus::kPending: return "pending";
    case InvocationStatus::kAllowed: return "allowed";
    case InvocationStatus::kDenied: return "denied";
  }
  return "?";
}

SystemView SystemView::BeginRound(std::shared_ptr<const LabelSet> labels,
                                  std::string user, std::string entry_agent) {
  SystemView view;
  view.labels_ = std::move(labels);
  view.round_ = next_round_serial.fetch_add(1);
  // Validate before mutating so a failed round leaves nothing behind.
  SubjectLabel agent_label = view.LabelFor(entry_agent, SubjectKind::kAgent);
  NodeId u = view.AddNode(std::move(user), SubjectKind::kUser);
  NodeId a = view.AddNode(std::move(entry_agent), SubjectKind::kAgent);
  view.nodes_[a.index].label = std::move(agent_label);
  view.AddEdge(u, a, EdgeKind::kQuery);
  return view;
}

SubjectLabel SystemView::LabelFor(std::string_view name, SubjectKind kind) const {
  if (kind == SubjectKind::kUser) return SubjectLabel{std::string(name), kind, {}};
  const SubjectLabel* label = labels_ ? labels_->Find(name) : nullptr;
  if (label == nullptr || label->kind != kind) {
    throw Error(ErrorCode::kUnlabeledSubject,
                std::string(KindName(kind)) + " '" + std::string(name) +
                    "' has no label");
  }
  return *label;
}

NodeId SystemView::AddNode(std::string name, SubjectKind kind) {
  NodeInstance node;
  node.id = {round_, static_cast<uint32_t>(nodes_.size())};
  node.label = LabelFor(name, kind);
  node.subject_name = std::move(name);
  node.kind = kind;
  node.created_seq = next_seq_;
  nodes_.push_back(std::move(node));
  return nodes_.back().id;
}

void SystemView::AddEdge(NodeId from, NodeId to, EdgeKind kind, std::string message) {
  edges_.push_back({from, to, kind, next_seq_++, std::move(message)});
}

std::optional<NodeId> SystemView::FindSingleton(std::string_view name,
                                                SubjectKind kind) const {
  for (const NodeInstance& n : nodes_) {
    if (n.kind == kind && n.subject_name == name) return n.id;
  }
  return std::nullopt;
}

bool SystemView::Contains(NodeId id) const {
  return id.round == round_ && id.index < nodes_.size();
}

const NodeInstance& SystemView::node(NodeId id) const {
  if (!Contains(id)) {
    throw Error(ErrorCode::kUnknownAgentNode, Describe(id) + " is not in this view");
  }
  return nodes_[id.index];
}

NodeInstance& SystemView::MutableNode(NodeId id) {
  return const_cast<NodeInstance&>(node(id));
}

const NodeInstance& SystemView::RequireAgent(NodeId id) const {
  if (!Contains(id) || nodes_[id.index].kind != SubjectKind::kAgent) {
    throw Error(ErrorCode::kUnknownAgentNode, Describe(id) + " is not an agent node");
  }
  return nodes_[id.index];
}

NodeId SystemView::RecordInvocation(NodeId agent, std::string_view tool,
                                    nlohmann::json args) {
  RequireAgent(agent);
  NodeId t = AddNode(std::string(tool), SubjectKind::kTool);
  nodes_[t.index].args = args.is_null() ? nlohmann::json::object() : std::move(args);
  AddEdge(agent, t, EdgeKind::kInvoke);
  return t;
}

void SystemView::SetStatus(NodeId tool_node, InvocationStatus status) {
  if (!Contains(tool_node) || nodes_[tool_node.index].kind != SubjectKind::kTool ||
      nodes_[tool_node.index].status != InvocationStatus::kPending) {
    throw Error(ErrorCode::kNotPending, Describe(tool_node) + " is not a pending invocation");
  }
  nodes_[tool_node.index].status = status;
}

void SystemView::RecordReturn(NodeId tool_node) {
  if (!Contains(tool_node) || nodes_[tool_node.index].kind != SubjectKind::kTool) {
    throw Error(ErrorCode::kNoMatchingInvoke, Describe(tool_node) + " is not an invocation");
  }
  const NodeInstance& t = nodes_[tool_node.index];
  auto invoke = std::find_if(edges_.begin(), edges_.end(), [&](const FlowEdge& e) {
    return e.to == tool_node && e.kind == EdgeKind::kInvoke;
  });
  if (invoke == edges_.end()) {
    throw Error(ErrorCode::kNoMatchingInvoke, Describe(tool_node) + " was never invoked");
  }
  if (t.status != InvocationStatus::kAllowed) {
    throw Error(ErrorCode::kBlockedInvocation,
                t.subject_name + " invocation is " +
                    std::string(InvocationStatusName(t.status)));
  }
  bool returned = std::any_of(edges_.begin(), edges_.end(), [&](const FlowEdge& e) {
    return e.from == tool_node && e.kind == EdgeKind::kReturn;
  });
  if (returned) {
    throw Error(ErrorCode::kDuplicateReturn, t.subject_name + " already returned");
  }
  AddEdge(tool_node, invoke->from, EdgeKind::kReturn);
}

NodeId SystemView::RecordRetrieval(std::string_view db, NodeId agent) {
  RequireAgent(agent);
  std::optional<NodeId> d = FindSingleton(db, SubjectKind::kRagDb);
  if (!d) d = AddNode(std::string(db), SubjectKind::kRagDb);
  AddEdge(*d, agent, EdgeKind::kRetrieve);
  return *d;
}

NodeId SystemView::RecordMessage(NodeId from, std::string_view to_agent,
                                 std::string message) {
  const NodeInstance& sender = RequireAgent(from);
  if (sender.subject_name == to_agent) {
    throw Error(ErrorCode::kSelfMessage, sender.subject_name + " messaged itself");
  }
  std::optional<NodeId> to = FindSingleton(to_agent, SubjectKind::kAgent);
  if (!to) to = AddNode(std::string(to_agent), SubjectKind::kAgent);
  AddEdge(from, *to, EdgeKind::kMessage, std::move(message));
  return *to;
}

NodeId SystemView::AddSeedOrigin(SubjectKind kind, std::string_view name) {
  const NodeId agent = entry_agent();
  switch (kind) {
    case SubjectKind::kUser:
      return user_node();
    case SubjectKind::kRagDb: {
      if (auto existing = FindSingleton(name, kind)) return *existing;
      NodeId d = AddNode(std::string(name), kind);
      nodes_[d.index].seeded = true;
      AddEdge(d, agent, EdgeKind::kRetrieve);
      return d;
    }
    case SubjectKind::kTool: {
      for (const NodeInstance& n : nodes_) {
        if (n.seeded && n.kind == kind && n.subject_name == name) return n.id;
      }
      NodeId t = AddNode(std::string(name), kind);
      NodeInstance& tool = nodes_[t.index];
      tool.seeded = true;
      tool.status = InvocationStatus::kAllowed;
      tool.args = nlohmann::json::object();
      AddEdge(t, agent, EdgeKind::kReturn);
      return t;
    }
    case SubjectKind::kAgent:
      break;
  }
  throw Error(ErrorCode::kBadOriginKind, "agents cannot be memory origins");
}

std::vector<NodeId> SystemView::PendingInvocations() const {
  std::vector<NodeId> out;
  for (const NodeInstance& n : nodes_) {
    if (n.kind == SubjectKind::kTool && n.status == InvocationStatus::kPending) {
      out.push_back(n.id);
    }
  }
  return out;
}

std::vector<FlowPath> SystemView::PathsTo(NodeId target, size_t max_len) const {
  std::vector<FlowPath> out;
  if (!Contains(target) || max_len < 2) return out;

  // Incoming edges per node, for the backward walk.
  std::vector<std::vector<const FlowEdge*>> incoming(nodes_.size());
  for (const FlowEdge& e : edges_) incoming[e.to.index].push_back(&e);

  // Walking backward from the target, each predecessor is entered through its
  // latest edge below the current bound: a later edge leaves a superset of
  // choices further back, so one seq assignment per node sequence suffices.
  std::vector<uint32_t> stack{target.index};
  std::vector<int64_t> seqs;
  std::vector<bool> on_path(nodes_.size(), false);
  on_path[target.index] = true;

  auto emit = [&]() {
    FlowPath path;
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      path.nodes.push_back({round_, *it});
    }
    path.seqs.assign(seqs.rbegin(), seqs.rend());
    out.push_back(std::move(path));
  };

  auto walk = [&](auto&& self, uint32_t at, int64_t bound) -> void {
    if (stack.size() >= max_len) return;
    // Latest qualifying edge per predecessor.
    std::vector<std::pair<uint32_t, int64_t>> preds;
    for (const FlowEdge* e : incoming[at]) {
      if (e->seq >= bound || on_path[e->from.index]) continue;
      auto it = std::find_if(preds.begin(), preds.end(),
                             [&](const auto& p) { return p.first == e->from.index; });
      if (it == preds.end()) {
        preds.emplace_back(e->from.index, e->seq);
      } else {
        it->second = std::max(it->second, e->seq);
      }
    }
    for (const auto& [pred, seq] : preds) {
      stack.push_back(pred);
      seqs.push_back(seq);
      on_path[pred] = true;
      emit();
      self(self, pred, seq);
      on_path[pred] = false;
      seqs.pop_back();
      stack.pop_back();
    }
  };
  walk(walk, target.index, std::numeric_limits<int64_t>::max());

  std::sort(out.begin(), out.end(),
            [](const FlowPath& a, const FlowPath& b) { return a.seqs < b.seqs; });
  return out;
}

nlohmann::json SystemView::Snapshot() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const NodeInstance& n : nodes_) {
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& [attr, value] : n.label.attributes) {
      labels[std::string(AttributeName(attr))] = value;
    }
    nlohmann::json entry = {{"id", n.id.index},
                            {"name", n.subject_name},
                            {"kind", KindName(n.kind)},
                            {"labels", labels}};
    if (n.kind == SubjectKind::kTool) {
      entry["args"] = n.args;
      entry["status"] = InvocationStatusName(n.status);
    }
    if (n.seeded) entry["seeded"] = true;
    nodes.push_back(std::move(entry));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const FlowEdge& e : edges_) {
    nlohmann::json entry = {{"from", e.from.index},
                            {"to", e.to.index},
                            {"kind", EdgeKindName(e.kind)},
                            {"seq", e.seq}};
    if (e.kind == EdgeKind::kMessage) entry["msg"] = e.message;
    edges.push_back(std::move(entry));
  }
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

}  // namespace agent_warden
