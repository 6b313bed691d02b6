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
#include <string>
#include <vector>

#include "estore/kernel/trace.h"

namespace estore {

struct Violation {
  std::string checker;
  std::vector<std::uint64_t> seqs;
  std::string explanation;

  json to_json() const;
  std::string str() const;
};

// Conflict graph over one partition's committed transactions (minitransaction
// fragments count as transactions named "m:<id>"). Also flags lock releases
// that precede the owner's commit or abort, and, for five or fewer committed
// transactions, histories no serial order reproduces.
std::vector<Violation> check_serializability(const Trace& trace, PartitionId partition);
std::vector<Violation> check_serializability(const Trace& trace);

// Committed installs form a per-partition model. Every later read and every
// recovered or final store must agree with it.
std::vector<Violation> check_durability(const Trace& trace);

// Serving tenures (open..close/crash) never overlap per partition, admissions
// happen inside the admitting OTM's tenure, and volume append epochs never go
// backwards.
std::vector<Violation> check_single_ownership(const Trace& trace);

// Per minitransaction: one decision, COMMIT only with every participant's YES,
// writes applied exactly once per partition on COMMIT and never otherwise,
// compares matched committed values at vote time.
std::vector<Violation> check_mtx_atomicity(const Trace& trace);

// Controller reactions to sustained load, using the master's config record.
std::vector<Violation> check_elasticity(const Trace& trace);

// Kernel bookkeeping: seq and time order, deliveries match sends, no events
// from a node while it is down.
std::vector<Violation> check_kernel(const Trace& trace);

const std::vector<std::string>& checker_names();
// 'names' may contain "all". Throws ConfigError on an unknown name.
std::vector<Violation> run_checks(const Trace& trace, const std::vector<std::string>& names);

}  // namespace estore
