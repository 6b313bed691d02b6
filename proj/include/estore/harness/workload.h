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
#include <string>
#include <vector>

#include "estore/kernel/rng.h"
#include "estore/types.h"

namespace estore {

// Offered load from 'at' onwards, in operations per stats window summed over
// all clients.
struct RatePoint {
  SimTime at = 0;
  std::uint64_t per_window = 0;
};

struct WorkloadConfig {
  std::uint32_t clients = 0;
  // Operation mix weights; normalized when drawing.
  double read_only = 0.2;
  double txn = 0.7;
  double mtx = 0.1;
  // "uniform" or "zipfian".
  std::string distribution = "uniform";
  double zipf_s = 1.0;
  std::uint32_t min_ops = 2;
  std::uint32_t max_ops = 4;
  double read_fraction = 0.5;
  std::uint32_t ro_keys = 2;
  std::uint32_t mtx_partitions = 2;
  // Chance that an mtx carries a compare expecting its first write key to be
  // absent.
  double compare_probability = 0.0;
  std::vector<RatePoint> rate{{0, 200}};
  // Clients stop issuing once this many commits are on the trace; 0 = never.
  std::uint64_t max_commits = 0;
  SimTime start = 0;
  // Clients stop issuing at this time; 0 = never.
  SimTime stop = 0;

  std::uint64_t rate_at(SimTime t) const;
};

// Ranked key chooser. Rank r (0-based) is key_name(r); zipfian uses the
// inverse CDF over ranks with P(r) proportional to 1/(r+1)^s.
class KeyDistribution {
 public:
  KeyDistribution(std::uint64_t key_space, const std::string& kind, double s);

  std::uint64_t draw(Rng& rng) const;
  // Probability mass of rank 'r'.
  double mass(std::uint64_t r) const;
  std::uint64_t size() const { return key_space_; }

 private:
  std::uint64_t key_space_;
  bool zipf_;
  std::vector<double> cdf_;
};

struct TxnStep {
  bool write = false;
  Key key;
  Value value;
};

struct Operation {
  enum class Kind : std::uint8_t { kReadOnly, kTxn, kMtx };
  Kind kind = Kind::kTxn;
  std::uint64_t seq = 0;
  // kTxn
  PartitionId partition = 0;
  std::vector<TxnStep> steps;
  // kReadOnly keys, or kMtx read items.
  std::vector<Key> keys;
  // kMtx
  std::map<Key, std::optional<Value>> compares;
  std::map<Key, Value> writes;
};

std::string_view operation_kind_name(Operation::Kind kind);

// Deterministic per-client operation stream. Written values are unique:
// "<prefix>.<seq>.<i>".
class OperationGenerator {
 public:
  OperationGenerator(const WorkloadConfig& spec, const std::vector<KeyRange>& partitions,
                     std::uint64_t key_space, std::uint64_t seed, std::string prefix);

  Operation next();
  Rng& rng() { return rng_; }

 private:
  PartitionId partition_of(std::uint64_t rank) const;
  std::uint64_t draw_in(PartitionId p);
  Operation::Kind draw_kind();

  WorkloadConfig spec_;
  std::vector<KeyRange> partitions_;
  KeyDistribution keys_;
  std::vector<std::vector<std::uint64_t>> by_partition_;
  std::vector<PartitionId> rank_partition_;
  Rng rng_;
  std::string prefix_;
  std::uint64_t seq_ = 0;
};

// Convenience for tests: 'count' operations from one generator.
std::vector<Operation> gen_workload(const WorkloadConfig& spec,
                                    const std::vector<KeyRange>& partitions,
                                    std::uint64_t key_space, std::uint64_t seed,
                                    std::size_t count);

}  // namespace estore
