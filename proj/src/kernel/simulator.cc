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

#include "estore/kernel/simulator.h"

#include <algorithm>

namespace estore {

void NetworkConfig::validate() const {
  if (min_delay > max_delay) {
    throw ConfigError("network: min_delay > max_delay");
  }
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
    throw ConfigError("network: drop_probability outside [0,1]");
  }
  std::set<NodeId> seen;
  for (const auto& set : partition_sets) {
    for (const auto& id : set) {
      if (!seen.insert(id).second) {
        throw ConfigError("network: partition sets overlap at " + id.str());
      }
    }
  }
}

bool NetworkConfig::blocked(const NodeId& a, const NodeId& b) const {
  int set_a = -1;
  int set_b = -1;
  for (std::size_t i = 0; i < partition_sets.size(); ++i) {
    if (partition_sets[i].count(a)) set_a = static_cast<int>(i);
    if (partition_sets[i].count(b)) set_b = static_cast<int>(i);
  }
  return set_a >= 0 && set_b >= 0 && set_a != set_b;
}

Simulator::Simulator(std::uint64_t seed, NetworkConfig network)
    : rng_(seed), network_(std::move(network)) {
  network_.validate();
}

Simulator::~Simulator() = default;

Simulator::Slot& Simulator::slot(const NodeId& id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw ConfigError("unknown node " + id.str());
  return it->second;
}

const Simulator::Slot& Simulator::slot(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw ConfigError("unknown node " + id.str());
  return it->second;
}

NodeId Simulator::add_node(Role role, NodeFactory factory) {
  std::uint32_t index = 0;
  for (const auto& [id, s] : nodes_) {
    if (id.role == role) index = std::max(index, id.index + 1);
  }
  NodeId id{role, index};
  Slot& s = nodes_[id];
  s.factory = std::move(factory);
  s.up = true;
  s.incarnation = 1;
  s.instance = s.factory(*this, id);
  push(Pending{now_, 0, id, s.incarnation, PendingType::kStart, nullptr, id, 0});
  return id;
}

bool Simulator::has_node(const NodeId& id) const { return nodes_.count(id) > 0; }

bool Simulator::alive(const NodeId& id) const {
  auto it = nodes_.find(id);
  return it != nodes_.end() && it->second.up;
}

std::vector<NodeId> Simulator::nodes(Role role) const {
  std::vector<NodeId> out;
  for (const auto& [id, s] : nodes_) {
    if (id.role == role) out.push_back(id);
  }
  return out;
}

Node* Simulator::instance(const NodeId& id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end() || !it->second.up) return nullptr;
  return it->second.instance.get();
}

void Simulator::record(const NodeId& node, EventKind kind, json payload) {
  TraceEvent e;
  e.seq = next_trace_seq_++;
  e.time = now_;
  e.node = node;
  e.kind = kind;
  e.payload = std::move(payload);
  const TraceEvent& stored = trace_.append(std::move(e));
  // Observers may append further events, which can reallocate the trace.
  if (!observers_.empty()) {
    TraceEvent copy = stored;
    for (auto& observer : observers_) observer(copy);
  }
}

void Simulator::push(Pending p) {
  p.seq = next_event_seq_++;
  queue_.push_back(std::move(p));
  std::push_heap(queue_.begin(), queue_.end(), PendingAfter{});
}

std::uint64_t Simulator::schedule(const NodeId& node, SimTime delay, json payload) {
  Slot& s = slot(node);
  if (!s.up) return 0;
  Pending p{now_ + delay, 0, node, s.incarnation, PendingType::kTimer, std::move(payload), node, 0};
  push(std::move(p));
  return next_event_seq_ - 1;
}

void Simulator::send(const NodeId& src, const NodeId& dst, json msg) {
  const Slot& from = slot(src);
  slot(dst);
  if (!from.up) return;
  const std::uint64_t id = next_msg_id_++;
  json type = msg.is_object() && msg.contains("type") ? msg["type"] : json(nullptr);
  record(src, EventKind::kSend, json{{"dst", dst}, {"id", id}, {"msg", msg}});
  if (network_.blocked(src, dst)) {
    record(src, EventKind::kDrop, json{{"dst", dst}, {"id", id}, {"reason", "partition"}});
    return;
  }
  if (rng_.chance(network_.drop_probability)) {
    record(src, EventKind::kDrop, json{{"dst", dst}, {"id", id}, {"reason", "loss"}});
    return;
  }
  const SimTime delay = rng_.uniform(network_.min_delay, network_.max_delay);
  Pending p{now_ + delay, 0, dst, 0, PendingType::kDeliver, std::move(msg), src, id};
  push(std::move(p));
}

void Simulator::take_down(Slot& s, const NodeId& id) {
  s.up = false;
  ++s.incarnation;
  if (s.instance) graveyard_.push_back(std::move(s.instance));
  for (auto& [name, vol] : volumes_) {
    if (vol.holder == id) vol.holder.reset();
  }
}

void Simulator::crash_node(const NodeId& id) {
  Slot& s = slot(id);
  if (!s.up) {
    record(id, EventKind::kLocal, json{{"ev", "crash_noop"}});
    return;
  }
  record(id, EventKind::kCrash, json::object());
  take_down(s, id);
}

void Simulator::restart_node(const NodeId& id) {
  Slot& s = slot(id);
  if (s.halted) throw ConfigError("restart of halted node " + id.str());
  if (s.up) return;
  s.up = true;
  ++s.incarnation;
  record(id, EventKind::kRestart, json::object());
  s.instance = s.factory(*this, id);
  push(Pending{now_, 0, id, s.incarnation, PendingType::kStart, nullptr, id, 0});
}

void Simulator::halt_node(const NodeId& id) {
  Slot& s = slot(id);
  if (!s.up) return;
  record(id, EventKind::kLocal, json{{"ev", "halt"}});
  take_down(s, id);
  s.halted = true;
}

void Simulator::note(const NodeId& node, json payload) {
  if (!slot(node).up) return;
  record(node, EventKind::kLocal, std::move(payload));
}

void Simulator::create_volume(const std::string& id) {
  if (volumes_.count(id)) throw ConfigError("volume exists: " + id);
  volumes_[id];
}

bool Simulator::has_volume(const std::string& id) const { return volumes_.count(id) > 0; }

bool Simulator::attach_volume(const std::string& id, const NodeId& node, Epoch epoch) {
  auto it = volumes_.find(id);
  if (it == volumes_.end()) throw ConfigError("unknown volume " + id);
  if (!alive(node)) return false;
  Volume& v = it->second;
  json note{{"ev", "volume_attach"}, {"volume", id}, {"epoch", epoch}};
  bool ok = epoch >= v.max_epoch;
  if (ok && v.holder && *v.holder != node) {
    // A strictly newer epoch takes the volume over from the old holder.
    ok = epoch > v.holder_epoch;
    if (ok) note["took_over_from"] = *v.holder;
  }
  note["ok"] = ok;
  record(node, EventKind::kLocal, std::move(note));
  if (!ok) return false;
  v.holder = node;
  v.holder_epoch = epoch;
  v.max_epoch = std::max(v.max_epoch, epoch);
  return true;
}

void Simulator::detach_volume(const std::string& id, const NodeId& node) {
  auto it = volumes_.find(id);
  if (it == volumes_.end()) throw ConfigError("unknown volume " + id);
  if (it->second.holder == node) {
    it->second.holder.reset();
    note(node, json{{"ev", "volume_detach"}, {"volume", id}});
  }
}

Lsn Simulator::volume_append(const std::string& id, const NodeId& node, std::string rec,
                             json summary) {
  auto it = volumes_.find(id);
  if (it == volumes_.end()) throw ConfigError("unknown volume " + id);
  Volume& v = it->second;
  if (!alive(node) || v.holder != node) {
    throw FencingError("volume " + id + " not attached to " + node.str());
  }
  const Lsn lsn = v.records.size();
  const std::size_t bytes = rec.size();
  v.records.push_back(std::move(rec));
  record(node, EventKind::kVolumeAppend,
         json{{"volume", id}, {"lsn", lsn}, {"epoch", v.holder_epoch}, {"bytes", bytes},
              {"rec", std::move(summary)}});
  return lsn;
}

const std::vector<std::string>& Simulator::volume_records(const std::string& id) const {
  auto it = volumes_.find(id);
  if (it == volumes_.end()) throw ConfigError("unknown volume " + id);
  return it->second.records;
}

std::optional<NodeId> Simulator::volume_holder(const std::string& id) const {
  auto it = volumes_.find(id);
  if (it == volumes_.end()) throw ConfigError("unknown volume " + id);
  return it->second.holder;
}

void Simulator::add_observer(std::function<void(const TraceEvent&)> observer) {
  observers_.push_back(std::move(observer));
}

void Simulator::dispatch(Pending& p) {
  auto it = nodes_.find(p.node);
  if (it == nodes_.end()) return;
  Slot& s = it->second;
  if (!s.up) return;
  if (p.type != PendingType::kDeliver && p.incarnation != s.incarnation) return;
  // Keep the instance alive for the whole handler even if it crashes itself.
  Node* node = s.instance.get();
  try {
    switch (p.type) {
      case PendingType::kStart:
        node->on_start();
        break;
      case PendingType::kTimer:
        node->on_timer(p.payload);
        break;
      case PendingType::kDeliver: {
        json type = p.payload.is_object() && p.payload.contains("type") ? p.payload["type"]
                                                                        : json(nullptr);
        record(p.node, EventKind::kDeliver,
               json{{"src", p.src}, {"id", p.msg_id}, {"type", std::move(type)}});
        if (s.up) node->on_message(p.src, p.payload);
        break;
      }
    }
  } catch (const std::exception& e) {
    record(p.node, EventKind::kLocal, json{{"ev", "panic"}, {"what", e.what()}});
    graveyard_.clear();
    throw SimulationAborted(std::string("handler panic on ") + p.node.str() + ": " + e.what());
  }
  graveyard_.clear();
}

bool Simulator::step(SimTime deadline) {
  if (queue_.empty() || queue_.front().time > deadline) return false;
  std::pop_heap(queue_.begin(), queue_.end(), PendingAfter{});
  Pending p = std::move(queue_.back());
  queue_.pop_back();
  now_ = std::max(now_, p.time);
  dispatch(p);
  return true;
}

void Simulator::run_until(SimTime deadline) {
  stop_requested_ = false;
  while (!stop_requested_ && step(deadline)) {
  }
  if (!stop_requested_) now_ = std::max(now_, deadline);
}

bool Simulator::run_until_quiescent(SimTime hard_limit) {
  stop_requested_ = false;
  while (!stop_requested_ && step(hard_limit)) {
  }
  return queue_.empty();
}

}  // namespace estore
