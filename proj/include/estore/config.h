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
#include <string>
#include <vector>

#include "estore/kernel/simulator.h"
#include "estore/types.h"

namespace estore {

// Deliberately broken behaviours, used to prove the checkers can fire.
struct Mutations {
  // COMMIT is appended unforced, so a crash can lose an acknowledged commit.
  bool skip_forced_commit = false;
  // OTMs serve right up to their local view of lease expiry.
  bool disable_safety_margin = false;
  // Minitransaction writes are installed at YES-vote time.
  bool apply_mtx_on_vote = false;
};

struct SystemConfig {
  SimTime lease_duration = 10'000;
  SimTime safety_margin = 500;
  SimTime checkpoint_interval = 2'000;
  std::uint32_t checkpoint_commits = 100;
  SimTime stats_window = 5'000;
  std::uint64_t t_high = 100;
  std::uint64_t t_low = 10;
  SimTime drain_deadline = 1'000;
  // Zero means "derive from the network": 4x and 8x max_delay.
  SimTime mtx_timeout = 0;
  SimTime client_deadline = 0;
  SimTime detect_interval = 100;
  // Zero means 4x client_deadline.
  SimTime txn_idle_timeout = 0;
  bool elasticity = true;
  std::uint32_t min_otms = 1;
  Mutations mutations;
  // How far an OTM's local clock runs behind simulated time, by OTM index.
  std::map<std::uint32_t, SimTime> otm_clock_lag;

  void derive_defaults(const NetworkConfig& network);
};

// Shared, crash-independent wiring for one simulated deployment.
struct Cluster {
  SystemConfig config;
  std::vector<KeyRange> partitions;
  NodeId metadata{Role::kMetadata, 0};
  NodeId master{Role::kMaster, 0};
  // OTMs started with the system; the master bootstraps once they are ready.
  std::uint32_t initial_otms = 1;
  // The client-side load balancer: HTMs currently in rotation.
  std::vector<NodeId> htms;
  // Starts a fresh OTM node; installed by the scenario runner.
  std::function<NodeId()> spawn_otm;

  static std::string volume_for(PartitionId p) { return "vol-p" + std::to_string(p); }
  // Partition whose range holds 'key'. Ranges tile the key space.
  PartitionId partition_of(const Key& key) const;
};

// Splits [k000000, k<key_space>) into 'count' contiguous ranges; the first
// starts at "" and the last is unbounded so the whole key space is tiled.
std::vector<KeyRange> even_ranges(std::uint64_t key_space, std::uint32_t count);

}  // namespace estore
