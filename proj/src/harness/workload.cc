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

#include "estore/harness/workload.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "estore/kernel/simulator.h"

namespace estore {

std::uint64_t WorkloadConfig::rate_at(SimTime t) const {
  std::uint64_t r = 0;
  for (const auto& point : rate) {
    if (point.at <= t) r = point.per_window;
  }
  return r;
}

KeyDistribution::KeyDistribution(std::uint64_t key_space, const std::string& kind, double s)
    : key_space_(key_space), zipf_(kind == "zipfian") {
  if (key_space == 0) throw ConfigError("key_space must be positive");
  if (kind != "uniform" && kind != "zipfian") {
    throw ConfigError("unknown key distribution: " + kind);
  }
  if (!zipf_) return;
  cdf_.resize(key_space);
  double total = 0.0;
  for (std::uint64_t r = 0; r < key_space; ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), s);
    cdf_[r] = total;
  }
  for (auto& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

std::uint64_t KeyDistribution::draw(Rng& rng) const {
  if (!zipf_) return rng.uniform(0, key_space_ - 1);
  const double u = rng.unit();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<std::uint64_t>(it - cdf_.begin());
}

double KeyDistribution::mass(std::uint64_t r) const {
  if (r >= key_space_) return 0.0;
  if (!zipf_) return 1.0 / static_cast<double>(key_space_);
  return r == 0 ? cdf_[0] : cdf_[r] - cdf_[r - 1];
}

std::string_view operation_kind_name(Operation::Kind kind) {
  switch (kind) {
    case Operation::Kind::kReadOnly: return "read_only";
    case Operation::Kind::kTxn: return "txn";
    case Operation::Kind::kMtx: return "mtx";
  }
  return "?";
}

OperationGenerator::OperationGenerator(const WorkloadConfig& spec,
                                       const std::vector<KeyRange>& partitions,
                                       std::uint64_t key_space, std::uint64_t seed,
                                       std::string prefix)
    : spec_(spec),
      partitions_(partitions),
      keys_(key_space, spec.distribution, spec.zipf_s),
      by_partition_(partitions.size()),
      rng_(seed),
      prefix_(std::move(prefix)) {
  rank_partition_.resize(key_space);
  for (std::uint64_t r = 0; r < key_space; ++r) {
    const Key k = key_name(r);
    PartitionId p = 0;
    for (std::size_t i = 0; i < partitions_.size(); ++i) {
      if (partitions_[i].contains(k)) {
        p = static_cast<PartitionId>(i);
        break;
      }
    }
    rank_partition_[r] = p;
    by_partition_[p].push_back(r);
  }
}

PartitionId OperationGenerator::partition_of(std::uint64_t rank) const {
  return rank_partition_[rank];
}

std::uint64_t OperationGenerator::draw_in(PartitionId p) {
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t r = keys_.draw(rng_);
    if (partition_of(r) == p) return r;
  }
  const auto& ranks = by_partition_[p];
  return ranks[rng_.uniform(0, ranks.size() - 1)];
}

Operation::Kind OperationGenerator::draw_kind() {
  const double total = spec_.read_only + spec_.txn + spec_.mtx;
  const double u = rng_.unit() * total;
  if (u < spec_.read_only) return Operation::Kind::kReadOnly;
  if (u < spec_.read_only + spec_.txn || spec_.mtx <= 0.0) return Operation::Kind::kTxn;
  return Operation::Kind::kMtx;
}

Operation OperationGenerator::next() {
  Operation op;
  op.seq = seq_++;
  op.kind = draw_kind();
  auto value = [&](std::size_t i) {
    return prefix_ + "." + std::to_string(op.seq) + "." + std::to_string(i);
  };
  switch (op.kind) {
    case Operation::Kind::kReadOnly: {
      const std::uint32_t n = std::max<std::uint32_t>(spec_.ro_keys, 1);
      for (std::uint32_t i = 0; i < n; ++i) op.keys.push_back(key_name(keys_.draw(rng_)));
      break;
    }
    case Operation::Kind::kTxn: {
      const std::uint64_t first = keys_.draw(rng_);
      op.partition = partition_of(first);
      const std::uint64_t n = rng_.uniform(std::max<std::uint32_t>(spec_.min_ops, 1),
                                           std::max(spec_.min_ops, spec_.max_ops));
      for (std::uint64_t i = 0; i < n; ++i) {
        TxnStep step;
        step.key = key_name(i == 0 ? first : draw_in(op.partition));
        step.write = rng_.chance(1.0 - spec_.read_fraction);
        if (step.write) step.value = value(i);
        op.steps.push_back(std::move(step));
      }
      break;
    }
    case Operation::Kind::kMtx: {
      const std::uint64_t first = keys_.draw(rng_);
      std::vector<PartitionId> parts{partition_of(first)};
      const std::size_t want = std::min<std::size_t>(
          std::max<std::uint32_t>(spec_.mtx_partitions, 1), partitions_.size());
      while (parts.size() < want) {
        const auto p = static_cast<PartitionId>(rng_.uniform(0, partitions_.size() - 1));
        if (std::find(parts.begin(), parts.end(), p) == parts.end()) parts.push_back(p);
      }
      std::vector<Key> keys{key_name(first)};
      for (std::size_t i = 1; i < parts.size(); ++i) keys.push_back(key_name(draw_in(parts[i])));
      for (std::size_t i = 0; i < keys.size(); ++i) op.writes[keys[i]] = value(i);
      op.keys.push_back(keys.front());
      if (rng_.chance(spec_.compare_probability)) op.compares[keys.back()] = std::nullopt;
      break;
    }
  }
  return op;
}

std::vector<Operation> gen_workload(const WorkloadConfig& spec,
                                    const std::vector<KeyRange>& partitions,
                                    std::uint64_t key_space, std::uint64_t seed,
                                    std::size_t count) {
  OperationGenerator gen(spec, partitions, key_space, seed, "w");
  std::vector<Operation> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(gen.next());
  return out;
}

}  // namespace estore
