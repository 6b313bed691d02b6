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

#include "estore/kernel/node_base.h"

namespace estore {

void NodeBase::on_timer(const json& payload) {
  if (!payload.is_object() || !payload.contains("timer")) return;
  auto it = timers_.find(payload["timer"].get<std::uint64_t>());
  if (it == timers_.end()) return;
  auto fn = std::move(it->second);
  timers_.erase(it);
  fn();
}

void NodeBase::reply(const NodeId& dst, const json& request, json response) {
  if (request.contains("req")) response["re"] = request["req"];
  send(dst, std::move(response));
}

std::uint64_t NodeBase::after(SimTime delay, std::function<void()> fn) {
  const std::uint64_t id = next_timer_++;
  timers_.emplace(id, std::move(fn));
  sim_.schedule(self_, delay, json{{"timer", id}});
  return id;
}

void NodeBase::cancel(std::uint64_t timer) { timers_.erase(timer); }

void NodeBase::call(const NodeId& dst, json msg, SimTime timeout, Reply on_reply) {
  const std::uint64_t req = next_req_++;
  msg["req"] = req;
  PendingCall pc;
  pc.on_reply = std::move(on_reply);
  pc.timer = after(timeout, [this, req] {
    auto it = calls_.find(req);
    if (it == calls_.end()) return;
    auto cb = std::move(it->second.on_reply);
    calls_.erase(it);
    cb(nullptr);
  });
  calls_.emplace(req, std::move(pc));
  send(dst, std::move(msg));
}

bool NodeBase::complete_call(const json& msg) {
  auto re = msg.find("re");
  if (re == msg.end()) return false;
  auto it = calls_.find(re->get<std::uint64_t>());
  // A late response to a call that already timed out is swallowed.
  if (it == calls_.end()) return true;
  auto cb = std::move(it->second.on_reply);
  cancel(it->second.timer);
  calls_.erase(it);
  cb(&msg);
  return true;
}

}  // namespace estore
