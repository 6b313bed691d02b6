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

#include "estore/config.h"

#include <algorithm>
#include <stdexcept>

namespace estore {

void SystemConfig::derive_defaults(const NetworkConfig& network) {
  const SimTime max_delay = std::max<SimTime>(network.max_delay, 1);
  if (mtx_timeout == 0) mtx_timeout = 4 * max_delay;
  if (client_deadline == 0) client_deadline = 8 * max_delay;
  if (txn_idle_timeout == 0) txn_idle_timeout = 4 * client_deadline;
}

PartitionId Cluster::partition_of(const Key& key) const {
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (partitions[i].contains(key)) return static_cast<PartitionId>(i);
  }
  throw std::out_of_range("key outside every partition: " + key);
}

std::vector<KeyRange> even_ranges(std::uint64_t key_space, std::uint32_t count) {
  if (count == 0) throw ConfigError("partition count must be positive");
  if (key_space < count) throw ConfigError("fewer keys than partitions");
  std::vector<KeyRange> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    KeyRange r;
    r.lo = i == 0 ? Key() : key_name(key_space * i / count);
    r.hi = i + 1 == count ? Key() : key_name(key_space * (i + 1) / count);
    out.push_back(r);
  }
  return out;
}

}  // namespace estore
