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

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "estore/config.h"
#include "estore/htm/routing_cache.h"
#include "estore/kernel/node_base.h"
#include "estore/otm/log_record.h"

namespace estore {

// Stateless front end. Everything it holds is volatile and safe to lose:
//   TxnOpen{key, rejected_epoch?, refresh?} -> TxnRoute{partition, owner, epoch} | Unavailable
//   ReadOnly{keys} -> ReadOnlyOk{values} | ReadOnlyFailed
//   MtxSubmit{mtx, compares, reads, writes} -> MtxResult{outcome, reads}
// where outcome is COMMIT, ABORT or UNRESOLVED.
class HtmNode : public NodeBase {
 public:
  HtmNode(Simulator& sim, NodeId self, const Cluster& cluster);

  void on_message(const NodeId& from, const json& msg) override;

  const RoutingCache& cache() const { return cache_; }

 private:
  using RouteFn = std::function<void(std::optional<Route>)>;

  struct Round {
    NodeId client;
    json request;
    std::map<PartitionId, MtxFragment> fragments;
    std::map<PartitionId, Route> routes;
    std::map<PartitionId, bool> votes;
    json reads = json::object();
    std::uint64_t timer = 0;
    std::size_t unrouted = 0;
    bool sent = false;
  };

  // Resolves the owner of 'p'. With 'rejected_epoch' set, only a route newer
  // than that epoch is acceptable. Refreshes and backs off until 'deadline'.
  void route(PartitionId p, std::optional<Epoch> rejected_epoch, SimTime deadline, RouteFn done);
  void refresh(std::function<void()> done);

  void handle_open(const NodeId& from, const json& msg);
  void handle_read_only(const NodeId& from, const json& msg);
  void read_partition(PartitionId p, json keys, std::optional<Epoch> rejected, SimTime deadline,
                      std::function<void(const json*)> done);
  void handle_submit(const NodeId& from, const json& msg);
  void start_round(const std::string& mtx);
  void handle_vote(const std::string& mtx, PartitionId p, bool yes, const json& reads);
  void decide(const std::string& mtx, Decision decision);
  void give_up(const std::string& mtx, const std::string& outcome, const std::string& reason);

  const Cluster& cluster_;
  const SystemConfig& config_;
  RoutingCache cache_;
  bool fetching_ = false;
  std::vector<std::function<void()>> fetch_waiters_;
  std::map<std::string, Round> rounds_;
  // Partitions whose owner failed to answer; the next lookup refreshes.
  std::set<PartitionId> suspect_;
};

}  // namespace estore
