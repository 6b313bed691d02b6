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
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "estore/kernel/rng.h"
#include "estore/kernel/trace.h"
#include "estore/types.h"

namespace estore {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by volume_append when the caller is not the attached node.
class FencingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An event handler threw; the trace up to and including the panic record is
// preserved on the simulator.
class SimulationAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NetworkConfig {
  SimTime min_delay = 1;
  SimTime max_delay = 10;
  double drop_probability = 0.0;
  // Delivery is blocked between nodes that sit in two different sets. Nodes
  // outside every set talk to everyone.
  std::vector<std::set<NodeId>> partition_sets;

  void validate() const;
  bool blocked(const NodeId& a, const NodeId& b) const;
};

class Node {
 public:
  virtual ~Node() = default;
  virtual void on_start() {}
  virtual void on_message(const NodeId& from, const json& msg) = 0;
  virtual void on_timer(const json& /*payload*/) {}
};

class Simulator;
using NodeFactory = std::function<std::unique_ptr<Node>(Simulator&, NodeId)>;

// Single-threaded discrete-event kernel. Events run in (time, seq) order;
// every externally visible step is recorded in the trace.
class Simulator {
 public:
  Simulator(std::uint64_t seed, NetworkConfig network);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // Registers a node with the next free index for 'role' and schedules its
  // on_start at the current instant.
  NodeId add_node(Role role, NodeFactory factory);
  bool has_node(const NodeId& id) const;
  bool alive(const NodeId& id) const;
  std::vector<NodeId> nodes(Role role) const;
  // Live instance, or nullptr. For tests and post-run inspection.
  Node* instance(const NodeId& id);

  SimTime now() const { return now_; }

  // Runs node->on_timer(payload) at now()+delay unless the node crashes (or
  // restarts) first.
  std::uint64_t schedule(const NodeId& node, SimTime delay, json payload);

  void send(const NodeId& src, const NodeId& dst, json msg);

  void crash_node(const NodeId& id);
  void restart_node(const NodeId& id);
  // Permanent stop; the node never restarts.
  void halt_node(const NodeId& id);

  // Appends a LOCAL trace record attributed to 'node'. Ignored if the node
  // is down.
  void note(const NodeId& node, json payload);

  // Durable volumes. One attached node at a time; attachment carries an
  // epoch and a higher epoch may take over from a lower one.
  void create_volume(const std::string& id);
  bool has_volume(const std::string& id) const;
  bool attach_volume(const std::string& id, const NodeId& node, Epoch epoch);
  void detach_volume(const std::string& id, const NodeId& node);
  Lsn volume_append(const std::string& id, const NodeId& node, std::string record,
                    json summary = nullptr);
  const std::vector<std::string>& volume_records(const std::string& id) const;
  std::optional<NodeId> volume_holder(const std::string& id) const;

  Rng& rng() { return rng_; }
  NetworkConfig& network() { return network_; }
  const NetworkConfig& network() const { return network_; }

  void run_until(SimTime deadline);
  // Runs until the queue drains or 'hard_limit' passes; returns true if the
  // queue drained.
  bool run_until_quiescent(SimTime hard_limit);
  // Makes the current run_* call return after the running event.
  void request_stop() { stop_requested_ = true; }

  const Trace& trace() const { return trace_; }
  void add_observer(std::function<void(const TraceEvent&)> observer);

 private:
  enum class PendingType : std::uint8_t { kStart, kTimer, kDeliver };
  struct Pending {
    SimTime time = 0;
    std::uint64_t seq = 0;
    NodeId node;
    std::uint64_t incarnation = 0;
    PendingType type = PendingType::kTimer;
    json payload;
    NodeId src;
    std::uint64_t msg_id = 0;
  };
  struct PendingAfter {
    bool operator()(const Pending& a, const Pending& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  struct Slot {
    NodeFactory factory;
    std::unique_ptr<Node> instance;
    bool up = false;
    bool halted = false;
    std::uint64_t incarnation = 0;
  };
  struct Volume {
    std::vector<std::string> records;
    std::optional<NodeId> holder;
    Epoch holder_epoch = 0;
    Epoch max_epoch = 0;
  };

  void record(const NodeId& node, EventKind kind, json payload);
  void push(Pending p);
  bool step(SimTime deadline);
  void dispatch(Pending& p);
  void take_down(Slot& slot, const NodeId& id);
  Slot& slot(const NodeId& id);
  const Slot& slot(const NodeId& id) const;

  Rng rng_;
  NetworkConfig network_;
  SimTime now_ = 0;
  std::uint64_t next_event_seq_ = 0;
  std::uint64_t next_trace_seq_ = 0;
  std::uint64_t next_msg_id_ = 0;
  std::vector<Pending> queue_;
  std::map<NodeId, Slot> nodes_;
  std::map<std::string, Volume> volumes_;
  std::vector<std::unique_ptr<Node>> graveyard_;
  std::vector<std::function<void(const TraceEvent&)>> observers_;
  Trace trace_;
  bool stop_requested_ = false;
};

}  // namespace estore
