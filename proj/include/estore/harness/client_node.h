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
#include <set>
#include <memory>
#include <optional>
#include <string>

#include "estore/config.h"
#include "estore/harness/workload.h"
#include "estore/kernel/node_base.h"

namespace estore {

// State shared by every client of one run; the runner feeds it from the
// trace.
struct WorkloadControl {
  std::uint64_t commits = 0;
  std::uint64_t max_commits = 0;

  bool exhausted() const { return max_commits > 0 && commits >= max_commits; }
};

// Closed-loop client with one operation in flight, paced to the configured rate.
// Single-partition transactions are routed through an HTM and then talk to
// the owning OTM directly; read-only queries and minitransactions go through
// the HTM.
class ClientNode : public NodeBase {
 public:
  ClientNode(Simulator& sim, NodeId self, const Cluster& cluster, const WorkloadConfig& spec,
             std::uint64_t key_space, std::uint64_t seed, const WorkloadControl* control);

  void on_start() override;
  void on_message(const NodeId& from, const json& msg) override;

 private:
  struct TxnState {
    Operation op;
    std::string tag;
    SimTime started = 0;
    NodeId owner;
    Epoch epoch = 0;
    std::string txn;
    std::size_t step = 0;
    int reopens = 0;
  };
  using TxnPtr = std::shared_ptr<TxnState>;

  void schedule_next();
  void issue();
  std::optional<NodeId> pick_htm();

  void open_txn(const TxnPtr& t, std::optional<Epoch> rejected);
  void begin_txn(const TxnPtr& t);
  void next_step(const TxnPtr& t);
  void commit_txn(const TxnPtr& t);
  void finish_txn(const TxnPtr& t, const std::string& outcome);

  void run_read_only(Operation op);
  void run_mtx(Operation op);
  void finished();

  const Cluster& cluster_;
  WorkloadConfig spec_;
  const WorkloadControl* control_;
  OperationGenerator gen_;
  std::uint64_t rr_ = 0;
  // Partitions whose owner stopped answering; the next open asks the HTM to
  // refresh its map first.
  std::set<PartitionId> suspect_;
  SimTime last_issue_ = 0;
};

}  // namespace estore
