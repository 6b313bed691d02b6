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

#include "estore/master/planner.h"

#include <algorithm>
#include <set>

namespace estore {

std::uint64_t LoadStats::otm_load(const NodeId& otm) const {
  std::uint64_t total = 0;
  auto it = owned.find(otm);
  if (it == owned.end()) return 0;
  for (PartitionId p : it->second) {
    if (auto l = per_partition.find(p); l != per_partition.end()) total += l->second;
  }
  return total;
}

void to_json(json& j, const Move& m) {
  j = json{{"partition", m.partition}, {"src", m.src}};
  if (m.dst) {
    j["dst"] = *m.dst;
  } else {
    j["dst_spawn"] = m.spawn_slot;
  }
}

void to_json(json& j, const MigrationPlan& plan) {
  j = json{{"spawns", plan.spawns}, {"retires", plan.retires}, {"moves", plan.moves},
           {"saturated", plan.saturated}};
}

namespace {

struct Bin {
  std::optional<NodeId> node;
  std::uint32_t spawn_slot = 0;
  std::uint64_t load = 0;
  std::vector<PartitionId> parts;
};

}  // namespace

MigrationPlan plan_rebalance(const LoadStats& stats, std::uint64_t t_high, std::uint64_t t_low,
                             std::uint32_t min_otms) {
  MigrationPlan plan;
  auto load_of = [&](PartitionId p) -> std::uint64_t {
    auto it = stats.per_partition.find(p);
    return it == stats.per_partition.end() ? 0 : it->second;
  };

  // Position in 'bins' doubles as the tie-break order: existing OTMs by
  // node id, then spawns in creation order.
  std::vector<Bin> bins;
  for (const auto& [otm, parts] : stats.owned) {
    Bin b;
    b.node = otm;
    b.parts = parts;
    std::sort(b.parts.begin(), b.parts.end());
    for (PartitionId p : b.parts) b.load += load_of(p);
    bins.push_back(std::move(b));
  }
  const std::size_t existing = bins.size();

  auto least_loaded = [&](std::size_t exclude, std::size_t limit) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < limit; ++i) {
      if (i == exclude) continue;
      if (!best || bins[i].load < bins[*best].load) best = i;
    }
    return best;
  };

  std::set<std::size_t> saturated;
  std::size_t partition_count = 0;
  for (const auto& b : bins) partition_count += b.parts.size();
  for (std::size_t round = 0; round <= partition_count + bins.size(); ++round) {
    std::optional<std::size_t> src;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (bins[i].load <= t_high || saturated.count(i)) continue;
      if (!src || bins[i].load > bins[*src].load) src = i;
    }
    if (!src) break;
    Bin& from = bins[*src];
    if (from.parts.size() <= 1) {
      saturated.insert(*src);
      if (from.node) plan.saturated.push_back(*from.node);
      continue;
    }

    // Smallest partition whose departure is enough; else the hottest.
    std::optional<PartitionId> pick;
    for (PartitionId p : from.parts) {
      const std::uint64_t l = load_of(p);
      if (from.load - l > t_high) continue;
      if (!pick || l < load_of(*pick)) pick = p;
    }
    if (!pick) {
      for (PartitionId p : from.parts) {
        if (!pick || load_of(p) > load_of(*pick)) pick = p;
      }
    }
    const std::uint64_t pl = load_of(*pick);

    auto target = least_loaded(*src, bins.size());
    if (!target || bins[*target].load + pl > t_high) {
      Bin b;
      b.spawn_slot = plan.spawns++;
      bins.push_back(std::move(b));
      target = bins.size() - 1;
    }
    Bin& src_bin = bins[*src];
    Bin& dst_bin = bins[*target];
    src_bin.parts.erase(std::find(src_bin.parts.begin(), src_bin.parts.end(), *pick));
    src_bin.load -= pl;
    dst_bin.parts.push_back(*pick);
    dst_bin.load += pl;
    plan.moves.push_back(Move{*pick, *src_bin.node, dst_bin.node, dst_bin.spawn_slot});
  }

  if (!plan.moves.empty() || plan.spawns > 0) return plan;
  if (existing < 2 || existing <= min_otms) return plan;

  std::size_t lightest = 0;
  for (std::size_t i = 1; i < existing; ++i) {
    if (bins[i].load < bins[lightest].load) lightest = i;
  }
  if (bins[lightest].load >= t_low) return plan;

  std::vector<PartitionId> parts = bins[lightest].parts;
  std::stable_sort(parts.begin(), parts.end(),
                   [&](PartitionId a, PartitionId b) { return load_of(a) > load_of(b); });
  std::vector<Bin> trial = bins;
  std::vector<Move> moves;
  for (PartitionId p : parts) {
    std::optional<std::size_t> target;
    for (std::size_t i = 0; i < existing; ++i) {
      if (i == lightest) continue;
      if (!target || trial[i].load < trial[*target].load) target = i;
    }
    if (!target || trial[*target].load + load_of(p) > t_high) return plan;
    trial[*target].load += load_of(p);
    moves.push_back(Move{p, *bins[lightest].node, trial[*target].node, 0});
  }
  plan.moves = std::move(moves);
  plan.retires.push_back(*bins[lightest].node);
  return plan;
}

}  // namespace estore
