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

#include "estore/types.h"

namespace estore {

// Time-bounded right to serve. Dead at t >= expires_at.
struct Lease {
  NodeId otm;
  Epoch epoch = 0;
  SimTime granted_at = 0;
  SimTime expires_at = 0;

  bool live_at(SimTime t) const { return t < expires_at; }
  bool operator==(const Lease&) const = default;
};

void to_json(json& j, const Lease& lease);
void from_json(const json& j, Lease& lease);

struct PartitionEntry {
  PartitionId id = 0;
  KeyRange range;
  std::optional<NodeId> owner;
  // Fencing token; 0 until the first assignment.
  Epoch ownership_epoch = 0;
  std::uint64_t version = 0;
  // Lease epoch the owner held when it was assigned, so an expired lease can
  // be matched to the partitions it was covering even after the same OTM
  // identity obtains a newer lease.
  Epoch owner_lease_epoch = 0;

  bool operator==(const PartitionEntry&) const = default;
};

void to_json(json& j, const PartitionEntry& e);
void from_json(const json& j, PartitionEntry& e);

struct PartitionMap {
  std::vector<PartitionEntry> entries;  // indexed by partition id

  const PartitionEntry* find(PartitionId id) const {
    return id < entries.size() ? &entries[id] : nullptr;
  }
  const PartitionEntry* locate(const Key& key) const;
  std::vector<PartitionId> owned_by(const NodeId& otm) const;
};

void to_json(json& j, const PartitionMap& m);
void from_json(const json& j, PartitionMap& m);

struct LeaseResult {
  bool ok = false;
  Lease lease;
  std::string reason;
};

struct CasResult {
  enum class Status : std::uint8_t { kOk, kConflict, kRejected };
  Status status = Status::kRejected;
  // The entry after the update on success; the current entry otherwise.
  PartitionEntry entry;
  std::string reason;
};

std::string_view cas_status_name(CasResult::Status s);

// Authoritative lease table and partition map. Every operation is atomic;
// the owning node serializes requests.
class MetadataStore {
 public:
  MetadataStore(std::vector<KeyRange> partitions, SimTime lease_duration);

  LeaseResult acquire_lease(const NodeId& otm, SimTime now);
  LeaseResult renew_lease(const NodeId& otm, Epoch epoch, SimTime now);
  bool release_lease(const NodeId& otm, Epoch epoch);

  CasResult cas_assign(PartitionId partition, std::uint64_t expected_version,
                       const NodeId& new_owner, SimTime now);

  PartitionMap snapshot() const { return map_; }

  // Lessees with expires_at <= now that have not been released.
  std::vector<Lease> expired_lessees(SimTime now) const;
  std::optional<Lease> live_lease(const NodeId& otm, SimTime now) const;

  SimTime lease_duration() const { return lease_duration_; }

 private:
  SimTime lease_duration_;
  Epoch lease_counter_ = 0;
  std::map<Epoch, Lease> leases_;
  PartitionMap map_;
};

}  // namespace estore
