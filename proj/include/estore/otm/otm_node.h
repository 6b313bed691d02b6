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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "estore/config.h"
#include "estore/kernel/node_base.h"
#include "estore/metadata/metadata_store.h"
#include "estore/otm/partition_engine.h"
#include "estore/otm/volume_log.h"

namespace estore {

// Owning transaction manager.
//
// Control messages (from the master):
//   Recover{partition, epoch} -> Recovered{ok, in_doubt}
//   Open{partition, epoch} -> Opened{ok}
//   Quiesce{partition, epoch, hint} -> QuiesceDone{ok}
//   VoteQuery{mtx, partition} -> VoteQueryResp{ok, yes}
//   Retire{} -> RetireResp{ok}
//   MtxDecision{mtx, partition, decision}
// Client messages, each carrying {partition, epoch}:
//   Begin{tag} -> BeginOk{txn}
//   Read{txn, key} -> ReadOk{value}
//   Write{txn, key, value} -> WriteOk{}
//   Commit{txn} -> CommitOk{lsn}
//   Abort{txn} -> AbortOk{}
//   SingleRead{keys} -> SingleReadOk{values}
//   MtxRound{mtx, fragment, participants} -> Vote{yes, reads}
// Any of them may instead get Rejected{reason, hint}, Aborted{reason} or
// Error{reason}.
class OtmNode : public NodeBase {
 public:
  OtmNode(Simulator& sim, NodeId self, const Cluster& cluster);
  ~OtmNode() override;

  void on_start() override;
  void on_message(const NodeId& from, const json& msg) override;

  // Inspection for tests.
  std::optional<Epoch> lease_epoch() const;
  const PartitionEngine* engine(PartitionId p) const;
  bool serving(PartitionId p) const;

 private:
  class Listener;
  struct Slot {
    PartitionId id = 0;
    Epoch epoch = 0;
    std::unique_ptr<VolumeLog> log;
    std::unique_ptr<Listener> listener;
    std::unique_ptr<PartitionEngine> engine;
    bool open = false;
    bool draining = false;
    std::optional<NodeId> hint;
    std::map<std::string, std::uint64_t> resolve_timers;
    // Quiesce requests answered once the handoff completes.
    std::vector<std::pair<NodeId, json>> quiesce_waiters;
  };
  struct TxnInfo {
    NodeId client;
    PartitionId partition = 0;
    json tag;
    // The queued read/write awaiting a lock grant, if any.
    std::optional<json> pending;
  };

  // Local clock; runs behind simulated time by the configured lag.
  SimTime local_now() const;
  bool lease_ok() const;
  void acquire_lease();
  void arm_lease_timers();
  void fence_check(std::uint64_t generation);
  void renew();
  void self_fence(const std::string& reason);
  void drop_partition(PartitionId p, const std::string& reason);

  // Serve guard. Returns the slot to use or replies Rejected and returns
  // nullptr.
  Slot* admit(const NodeId& from, const json& msg, bool new_work);
  void reject(const NodeId& from, const json& msg, const std::string& reason,
              const std::optional<NodeId>& hint);

  void handle_recover(const NodeId& from, const json& msg);
  void handle_open(const NodeId& from, const json& msg);
  void handle_quiesce(const NodeId& from, const json& msg);
  void finish_quiesce(PartitionId p, SimTime deadline);
  void handle_vote_query(const NodeId& from, const json& msg);
  void handle_retire(const NodeId& from, const json& msg);
  void handle_decision(const json& msg);
  void handle_txn(const NodeId& from, const json& msg);
  void handle_single_read(const NodeId& from, const json& msg);
  void handle_mtx_round(const NodeId& from, const json& msg);

  void watch_in_doubt(Slot& slot, const std::string& mtx_id, SimTime delay);
  // Returns false if the partition was dropped.
  bool maybe_checkpoint(Slot& slot, bool force);
  void send_ready(std::uint64_t generation);
  void checkpoint_tick();
  void idle_tick();
  void report_tick();

  const Cluster& cluster_;
  const SystemConfig& config_;
  SimTime clock_lag_ = 0;
  std::optional<Lease> lease_;
  std::uint64_t lease_generation_ = 0;
  bool retiring_ = false;
  std::uint64_t next_txn_ = 1;
  std::map<PartitionId, std::unique_ptr<Slot>> slots_;
  std::map<TxnId, TxnInfo> txns_;
  // Partitions handed off by migration: epoch and the new owner hint.
  std::map<PartitionId, std::pair<Epoch, std::optional<NodeId>>> handed_off_;
  // Commits per partition not yet reported.
  std::map<PartitionId, std::uint64_t> load_;
};

}  // namespace estore
