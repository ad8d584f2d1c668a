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

// HTTP bridge between a running scenario and a remote approval console.
//
//   GET  /api/pending            -> [AskRequest...]
//   POST /api/decision           {ask_id, choice} -> {final, synthesized_policy?}
//   GET  /api/view/{round_id}    -> latest System View snapshot of that round
//   GET  /api/log?since=seq      -> [{seq, ...DecisionRecord}]
//
// ServeState is the transport-independent part; RegisterRoutes wires it into
// an httplib server.

#ifndef AGENT_WARDEN_SERVE_H_
#define AGENT_WARDEN_SERVE_H_

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <string>

#include "agent_warden/decision_engine.h"
#include "agent_warden/harness.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace agent_warden {

struct ServeReply {
  int status = 200;
  nlohmann::json body;
};

class ServeState : public RunObserver {
 public:
  // `answer_wait` bounds how long POST /api/decision waits for the round to
  // apply the answer before reporting the final outcome.
  explicit ServeState(std::chrono::milliseconds answer_wait = std::chrono::seconds(5))
      : answer_wait_(answer_wait) {}

  AskResponder& responder() { return queue_; }

  void OnView(const std::string& round_id, const SystemView& view) override;
  void OnDecision(const DecisionRecord& record) override;

  ServeReply Pending() const;
  ServeReply PostDecision(const std::string& body);
  ServeReply View(const std::string& round_id) const;
  // `since` is the raw query value; empty means 0.
  ServeReply Log(const std::string& since) const;

  const DecisionLog& log() const { return log_; }

 private:
  std::chrono::milliseconds answer_wait_;
  QueueResponder queue_;
  DecisionLog log_;
  mutable std::mutex mu_;
  std::condition_variable resolved_cv_;
  std::map<std::string, nlohmann::json> views_;
  std::map<std::string, DecisionRecord> resolved_;  // by ask_id
};

void RegisterRoutes(httplib::Server& server, ServeState& state);

}  // namespace agent_warden

#endif  // AGENT_WARDEN_SERVE_H_
