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

#include "agent_warden/serve.h"

#include <charconv>

#include "httplib.h"

namespace agent_warden {

using nlohmann::json;

namespace {

ServeReply ErrorReply(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

}  // namespace

void ServeState::OnView(const std::string& round_id, const SystemView& view) {
  json snapshot = view.Snapshot();
  std::lock_guard lock(mu_);
  views_[round_id] = std::move(snapshot);
}

void ServeState::OnDecision(const DecisionRecord& record) {
  log_.Append(record);
  if (!record.ask_id) return;
  {
    std::lock_guard lock(mu_);
    resolved_[*record.ask_id] = record;
  }
  resolved_cv_.notify_all();
}

ServeReply ServeState::Pending() const {
  json out = json::array();
  for (const AskRequest& request : queue_.Pending()) out.push_back(AskRequestToJson(request));
  return {200, std::move(out)};
}

ServeReply ServeState::PostDecision(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (!doc.is_object() || !doc.contains("ask_id") || !doc["ask_id"].is_string() ||
      !doc.contains("choice") || !doc["choice"].is_string()) {
    return ErrorReply(400, "expected {\"ask_id\": string, \"choice\": string}");
  }
  std::string ask_id = doc["ask_id"].get<std::string>();
  std::optional<AskChoice> choice = ParseAskChoice(doc["choice"].get<std::string>());
  if (!choice) return ErrorReply(400, "choice must be disallow, allow_once or always_allow");
  if (!queue_.Answer(ask_id, *choice)) {
    return ErrorReply(404, "unknown, answered or expired ask_id '" + ask_id + "'");
  }
  std::unique_lock lock(mu_);
  bool done = resolved_cv_.wait_for(lock, answer_wait_,
                                    [&] { return resolved_.contains(ask_id); });
  if (!done) return ErrorReply(504, "the round did not apply the answer in time");
  const DecisionRecord& record = resolved_.at(ask_id);
  json out = {{"final", GoalName(record.Effective())}};
  if (record.synthesized_policy) out["synthesized_policy"] = *record.synthesized_policy;
  return {200, std::move(out)};
}

ServeReply ServeState::View(const std::string& round_id) const {
  std::lock_guard lock(mu_);
  auto it = views_.find(round_id);
  if (it == views_.end()) return ErrorReply(404, "unknown round '" + round_id + "'");
  return {200, it->second};
}

ServeReply ServeState::Log(const std::string& since) const {
  uint64_t seq = 0;
  if (!since.empty()) {
    auto [end, ec] = std::from_chars(since.data(), since.data() + since.size(), seq);
    if (ec != std::errc() || end != since.data() + since.size()) {
      return ErrorReply(400, "since must be a non-negative integer");
    }
  }
  json out = json::array();
  for (const auto& [n, record] : log_.Since(seq)) {
    json entry = {{"seq", n}};
    entry.update(record.ToJson());
    out.push_back(std::move(entry));
  }
  return {200, std::move(out)};
}

void RegisterRoutes(httplib::Server& server, ServeState& state) {
  auto send = [](httplib::Response& res, const ServeReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  server.Get("/api/pending", [&state, send](const httplib::Request&, httplib::Response& res) {
    send(res, state.Pending());
  });
  server.Post("/api/decision",
              [&state, send](const httplib::Request& req, httplib::Response& res) {
                send(res, state.PostDecision(req.body));
              });
  server.Get(R"(/api/view/(.+))",
             [&state, send](const httplib::Request& req, httplib::Response& res) {
               send(res, state.View(req.matches[1].str()));
             });
  server.Get("/api/log", [&state, send](const httplib::Request& req, httplib::Response& res) {
    send(res, state.Log(req.has_param("since") ? req.get_param_value("since") : ""));
  });
}

}  // namespace agent_warden
