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

#include "estore/metadata/metadata_store.h"

#include <algorithm>

namespace estore {

void to_json(json& j, const Lease& lease) {
  j = json{{"otm", lease.otm},
           {"epoch", lease.epoch},
           {"granted_at", lease.granted_at},
           {"expires_at", lease.expires_at}};
}

void from_json(const json& j, Lease& lease) {
  lease.otm = j.at("otm").get<NodeId>();
  lease.epoch = j.at("epoch").get<Epoch>();
  lease.granted_at = j.at("granted_at").get<SimTime>();
  lease.expires_at = j.at("expires_at").get<SimTime>();
}

void to_json(json& j, const PartitionEntry& e) {
  j = json{{"id", e.id},
           {"range", e.range},
           {"owner", e.owner ? json(*e.owner) : json(nullptr)},
           {"ownership_epoch", e.ownership_epoch},
           {"version", e.version},
           {"owner_lease_epoch", e.owner_lease_epoch}};
}

void from_json(const json& j, PartitionEntry& e) {
  e.id = j.at("id").get<PartitionId>();
  e.range = j.at("range").get<KeyRange>();
  e.owner = j.at("owner").is_null() ? std::nullopt
                                    : std::optional<NodeId>(j.at("owner").get<NodeId>());
  e.ownership_epoch = j.at("ownership_epoch").get<Epoch>();
  e.version = j.at("version").get<std::uint64_t>();
  e.owner_lease_epoch = j.at("owner_lease_epoch").get<Epoch>();
}

void to_json(json& j, const PartitionMap& m) { j = m.entries; }
void from_json(const json& j, PartitionMap& m) {
  m.entries = j.get<std::vector<PartitionEntry>>();
}

const PartitionEntry* PartitionMap::locate(const Key& key) const {
  for (const auto& e : entries) {
    if (e.range.contains(key)) return &e;
  }
  return nullptr;
}

std::vector<PartitionId> PartitionMap::owned_by(const NodeId& otm) const {
  std::vector<PartitionId> out;
  for (const auto& e : entries) {
    if (e.owner == otm) out.push_back(e.id);
  }
  return out;
}

std::string_view cas_status_name(CasResult::Status s) {
  switch (s) {
    case CasResult::Status::kOk: return "ok";
    case CasResult::Status::kConflict: return "conflict";
    case CasResult::Status::kRejected: return "rejected";
  }
  return "?";
}

MetadataStore::MetadataStore(std::vector<KeyRange> partitions, SimTime lease_duration)
    : lease_duration_(lease_duration) {
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    PartitionEntry e;
    e.id = static_cast<PartitionId>(i);
    e.range = std::move(partitions[i]);
    map_.entries.push_back(std::move(e));
  }
}

std::optional<Lease> MetadataStore::live_lease(const NodeId& otm, SimTime now) const {
  for (const auto& [epoch, lease] : leases_) {
    if (lease.otm == otm && lease.live_at(now)) return lease;
  }
  return std::nullopt;
}

LeaseResult MetadataStore::acquire_lease(const NodeId& otm, SimTime now) {
  if (live_lease(otm, now)) {
    return {false, {}, "live lease exists"};
  }
  Lease lease{otm, ++lease_counter_, now, now + lease_duration_};
  leases_[lease.epoch] = lease;
  return {true, lease, {}};
}

LeaseResult MetadataStore::renew_lease(const NodeId& otm, Epoch epoch, SimTime now) {
  auto it = leases_.find(epoch);
  if (it == leases_.end() || it->second.otm != otm) {
    return {false, {}, "unknown lease epoch"};
  }
  if (!it->second.live_at(now)) {
    return {false, it->second, "lease expired"};
  }
  it->second.expires_at = now + lease_duration_;
  return {true, it->second, {}};
}

bool MetadataStore::release_lease(const NodeId& otm, Epoch epoch) {
  auto it = leases_.find(epoch);
  if (it == leases_.end() || it->second.otm != otm) return false;
  leases_.erase(it);
  return true;
}

CasResult MetadataStore::cas_assign(PartitionId partition, std::uint64_t expected_version,
                                    const NodeId& new_owner, SimTime now) {
  CasResult out;
  if (partition >= map_.entries.size()) {
    out.reason = "unknown partition";
    return out;
  }
  PartitionEntry& entry = map_.entries[partition];
  auto lease = live_lease(new_owner, now);
  if (!lease) {
    out.entry = entry;
    out.reason = "new owner holds no live lease";
    return out;
  }
  if (entry.version != expected_version) {
    out.status = CasResult::Status::kConflict;
    out.entry = entry;
    return out;
  }
  Epoch max_epoch = 0;
  for (const auto& e : map_.entries) max_epoch = std::max(max_epoch, e.ownership_epoch);
  entry.owner = new_owner;
  entry.ownership_epoch = max_epoch + 1;
  entry.owner_lease_epoch = lease->epoch;
  entry.version += 1;
  out.status = CasResult::Status::kOk;
  out.entry = entry;
  return out;
}

std::vector<Lease> MetadataStore::expired_lessees(SimTime now) const {
  std::vector<Lease> out;
  for (const auto& [epoch, lease] : leases_) {
    if (!lease.live_at(now)) out.push_back(lease);
  }
  return out;
}

}  // namespace estore
