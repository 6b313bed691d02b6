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

#include "estore/htm/routing_cache.h"

namespace estore {

void RoutingCache::update(PartitionMap map, SimTime now) {
  map_ = std::move(map);
  fetched_at_ = now;
}

std::optional<Route> RoutingCache::lookup(PartitionId p) const {
  const PartitionEntry* e = map_.find(p);
  if (!e || !e->owner) return std::nullopt;
  return Route{p, *e->owner, e->ownership_epoch};
}

bool RoutingCache::stale(PartitionId p, Epoch rejected_epoch) const {
  const PartitionEntry* e = map_.find(p);
  return !e || !e->owner || e->ownership_epoch <= rejected_epoch;
}

}  // namespace estore
