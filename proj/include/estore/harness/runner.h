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
#include <vector>

#include "estore/config.h"
#include "estore/harness/checkers.h"
#include "estore/harness/client_node.h"
#include "estore/harness/metrics.h"
#include "estore/harness/scenario.h"
#include "estore/kernel/simulator.h"

namespace estore {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<SimTime> until;
  bool check = true;
};

// Who serves a partition once the run has ended.
struct FinalOwnership {
  PartitionId partition = 0;
  std::optional<NodeId> map_owner;
  bool owner_lease_live = false;
  std::vector<NodeId> serving;
};

struct RunResult {
  // Declared first so the simulator (and the nodes that reference the
  // cluster) go away before it.
  std::unique_ptr<Cluster> cluster;
  std::unique_ptr<WorkloadControl> control;
  std::unique_ptr<Simulator> sim;
  Metrics metrics;
  std::vector<Violation> violations;
  std::vector<FinalOwnership> ownership;
  bool aborted = false;
  std::string abort_reason;

  const Trace& trace() const { return sim->trace(); }
  bool ok() const { return !aborted && violations.empty(); }
};

// Deterministic full run. Throws ConfigError before any event runs if the
// scenario is invalid.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

}  // namespace estore
