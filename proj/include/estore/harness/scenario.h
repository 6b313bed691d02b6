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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "estore/config.h"
#include "estore/harness/workload.h"
#include "estore/kernel/simulator.h"

namespace estore {

// A scheduled fault. Actions: crash, restart, partition (with 'sets'), heal,
// migrate (partition, optional 'to'), add_htm, remove_htm.
struct FaultAction {
  SimTime at = 0;
  std::string action;
  std::optional<NodeId> node;
  std::vector<std::set<NodeId>> sets;
  std::optional<PartitionId> partition;
  std::optional<NodeId> to;
};

// Crashes a node when the nth LOCAL event named 'ev' (optionally restricted
// to a role and to payload fields equal to 'match') is recorded. 'target' is
// "self", "field:<name>" for a node id held in the payload, or a node id.
struct Trigger {
  std::string ev;
  std::uint64_t nth = 1;
  std::optional<Role> role;
  json match = json::object();
  std::string target = "self";
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  SimTime duration = 60'000;
  std::uint64_t key_space = 1000;
  std::vector<KeyRange> partitions;
  std::uint32_t otms = 1;
  std::uint32_t htms = 1;
  NetworkConfig network;
  SystemConfig config;
  WorkloadConfig workload;
  std::vector<FaultAction> faults;
  std::vector<Trigger> triggers;
  // Checker names to run after the run; "all" by default.
  std::vector<std::string> checks{"all"};

  // Throws ConfigError describing the first problem found.
  void validate() const;

  static Scenario from_json(const json& j);
  static Scenario load(const std::string& path);
};

}  // namespace estore
