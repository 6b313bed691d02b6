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
#include <vector>

#include "estore/kernel/trace.h"

namespace estore {

struct WindowMetrics {
  std::uint64_t window = 0;
  std::uint64_t committed = 0;
  std::uint64_t aborted = 0;
  std::uint64_t rejected = 0;
  std::uint32_t live_otms = 0;

  bool operator==(const WindowMetrics&) const = default;
};

// Everything here is recomputed from a trace alone.
struct Metrics {
  SimTime window = 0;
  std::vector<WindowMetrics> windows;
  // CommitOk replies sent by OTMs (the trace's commit acknowledgements).
  std::uint64_t committed = 0;
  // txn_commit records (durably committed, acknowledged or not).
  std::uint64_t commit_records = 0;
  std::uint64_t aborted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t client_acked = 0;
  SimTime latency_p50 = 0;
  SimTime latency_p99 = 0;
  std::uint64_t migrations = 0;
  std::uint64_t spawns = 0;
  std::uint64_t retires = 0;
  std::vector<SimTime> recovery_latencies;
  std::uint64_t mtx_commit = 0;
  std::uint64_t mtx_abort = 0;
  std::uint64_t mtx_unresolved = 0;
  std::uint64_t fenced_appends = 0;

  json to_json() const;
  bool operator==(const Metrics&) const = default;
};

Metrics compute_metrics(const Trace& trace);

// Nearest-rank percentile of an unsorted sample; 0 for an empty sample.
SimTime percentile(std::vector<SimTime> sample, double pct);

}  // namespace estore
