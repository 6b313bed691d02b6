// Copyright 2026 The estore Authors
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

#pragma once

#include <cstdint>
#include <functional>
#include <map>

#include "estore/kernel/simulator.h"

namespace estore {

// Convenience layer for protocol nodes: closure timers and request/response
// calls with timeouts. All of it is volatile and dies with the instance.
//
// Requests carry "req": <id>; responses echo it as "re": <id>.
class NodeBase : public Node {
 public:
  NodeBase(Simulator& sim, NodeId self) : sim_(sim), self_(self) {}

  const NodeId& id() const { return self_; }
  void on_timer(const json& payload) override;

 protected:
  // Called with nullptr on timeout.
  using Reply = std::function<void(const json* response)>;

  SimTime now() const { return sim_.now(); }
  void send(const NodeId& dst, json msg) { sim_.send(self_, dst, std::move(msg)); }
  void note(json payload) { sim_.note(self_, std::move(payload)); }
  void reply(const NodeId& dst, const json& request, json response);

  std::uint64_t after(SimTime delay, std::function<void()> fn);
  void cancel(std::uint64_t timer);

  void call(const NodeId& dst, json msg, SimTime timeout, Reply on_reply);
  // Routes a response to its pending call. Returns false for anything that
  // is not a response to a live call.
  bool complete_call(const json& msg);

  Simulator& sim_;
  NodeId self_;

 private:
  struct PendingCall {
    Reply on_reply;
    std::uint64_t timer = 0;
  };

  std::uint64_t next_timer_ = 1;
  std::uint64_t next_req_ = 1;
  std::map<std::uint64_t, std::function<void()>> timers_;
  std::map<std::uint64_t, PendingCall> calls_;
};

}  // namespace estore
