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

#include <optional>

#include "estore/metadata/metadata_store.h"

namespace estore {

struct Route {
  PartitionId partition = 0;
  NodeId owner;
  Epoch epoch = 0;
};

// An HTM's possibly stale copy of the partition map. Correctness never
// depends on freshness: OTMs reject requests carrying a stale epoch.
class RoutingCache {
 public:
  void update(PartitionMap map, SimTime now);
  bool empty() const { return map_.entries.empty(); }
  SimTime fetched_at() const { return fetched_at_; }

  std::optional<Route> lookup(PartitionId p) const;
  // True when the cached route for 'p' is no newer than an epoch that an
  // OTM has just rejected.
  bool stale(PartitionId p, Epoch rejected_epoch) const;

 private:
  PartitionMap map_;
  SimTime fetched_at_ = 0;
};

}  // namespace estore
