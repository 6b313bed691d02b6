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
#include <optional>
#include <vector>

#include "estore/types.h"

namespace estore {

struct LoadStats {
  // Every live OTM appears, including ones that own nothing.
  std::map<NodeId, std::vector<PartitionId>> owned;
  std::map<PartitionId, std::uint64_t> per_partition;

  std::uint64_t otm_load(const NodeId& otm) const;
};

struct Move {
  PartitionId partition = 0;
  NodeId src;
  // Unset when the destination is the plan's spawn_slot-th new OTM.
  std::optional<NodeId> dst;
  std::uint32_t spawn_slot = 0;

  bool operator==(const Move&) const = default;
};

struct MigrationPlan {
  std::uint32_t spawns = 0;
  std::vector<NodeId> retires;
  std::vector<Move> moves;
  // OTMs above t_high that own a single partition; nothing can help them.
  std::vector<NodeId> saturated;

  bool empty() const { return spawns == 0 && retires.empty() && moves.empty(); }
};

void to_json(json& j, const Move& m);
void to_json(json& j, const MigrationPlan& plan);

// Deterministic greedy rebalance.
//
// Overload: while some OTM is above t_high, take the most loaded one and
// move the smallest partition whose departure brings it to t_high or below
// (the hottest partition if none does) to the least-loaded OTM, or to a new
// OTM if the least-loaded one would go above t_high. An overloaded OTM that
// owns one partition is reported as saturated and skipped.
//
// Shrink: only when the overload pass produced nothing, and more than
// 'min_otms' OTMs exist, the lightest OTM below t_low is retired if its
// partitions, hottest first, each fit on the then least-loaded remaining OTM
// without exceeding t_high. At most one retire per plan.
//
// Ties: lowest partition id, then lowest node index.
MigrationPlan plan_rebalance(const LoadStats& stats, std::uint64_t t_high, std::uint64_t t_low,
                             std::uint32_t min_otms = 1);

}  // namespace estore
