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
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "estore/config.h"
#include "estore/kernel/node_base.h"
#include "estore/master/decision_ledger.h"
#include "estore/master/planner.h"
#include "estore/metadata/metadata_store.h"

namespace estore {

// Control plane. Bootstraps the initial assignment, detects failed OTMs from
// expired leases, recovers and migrates partitions, runs the rebalance
// planner once per stats window and resolves in-doubt minitransactions.
//
// Messages handled: Ready{epoch}, LoadReport{window, loads},
// ResolveMtx{mtx, participants}. Modeled as a node that never crashes.
class MasterNode : public NodeBase {
 public:
  MasterNode(Simulator& sim, NodeId self, const Cluster& cluster);

  void on_start() override;
  void on_message(const NodeId& from, const json& msg) override;

  // Requests a one-off migration (used by fault schedules).
  void request_migration(PartitionId p, std::optional<NodeId> dst);

  const PartitionMap& map() const { return map_; }
  const DecisionLedger& ledger() const { return ledger_; }
  bool idle() const { return busy_.empty() && recovering_.empty() && !plan_active_; }

 private:
  using Done = std::function<void(bool)>;
  enum class AssignResult : std::uint8_t { kOpened, kCasFailed, kIncomplete };
  using AssignDone = std::function<void(AssignResult)>;

  struct OtmInfo {
    Epoch epoch = 0;
    bool retiring = false;
  };
  struct Resolution {
    std::vector<PartitionId> participants;
    std::map<PartitionId, bool> votes;
  };

  void poll();
  void on_map(const PartitionMap& map);
  void check_failures(const json& lessees);
  void recover_failed(const NodeId& otm, Epoch epoch, std::vector<PartitionId> parts);
  void redrive();
  void release_if_unreferenced(const NodeId& otm, Epoch epoch);
  void spawn(const std::string& reason, std::function<void(NodeId)> on_ready);

  void bootstrap();
  // CAS 'p' to 'dst', then Recover and Open it there.
  void assign(PartitionId p, const NodeId& dst, bool migration, AssignDone done);
  void recover_open(PartitionId p, const NodeId& dst, Epoch epoch, bool migration, int attempts,
                    Done done);
  void open(PartitionId p, const NodeId& dst, Epoch epoch, bool migration, int attempts,
            Done done);
  void migrate(PartitionId p, const NodeId& src, const NodeId& dst, Done done);
  void quiesce(PartitionId p, const NodeId& src, const NodeId& dst, Epoch epoch, int attempts,
               Done done);

  void plan_tick();
  void run_plan(const MigrationPlan& plan);
  void retire(const NodeId& otm);

  void decide_resolution(const std::string& mtx);
  void resolve(const std::string& mtx, const std::vector<PartitionId>& participants);
  void query_vote(const std::string& mtx, PartitionId p);
  void broadcast(const std::string& mtx, const std::vector<PartitionId>& participants,
                 Decision decision);

  const Cluster& cluster_;
  const SystemConfig& config_;
  SimTime rpc_timeout_ = 0;
  PartitionMap map_;
  bool bootstrapped_ = false;
  std::map<NodeId, OtmInfo> otms_;
  std::map<NodeId, std::function<void(NodeId)>> pending_spawns_;
  std::set<PartitionId> busy_;
  std::map<PartitionId, Epoch> opened_;
  std::set<std::pair<NodeId, Epoch>> recovering_;
  std::map<std::uint64_t, std::map<PartitionId, std::uint64_t>> loads_;
  bool plan_active_ = false;
  DecisionLedger ledger_;
  std::map<std::string, Resolution> resolving_;
};

}  // namespace estore
