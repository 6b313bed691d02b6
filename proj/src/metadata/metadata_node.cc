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

#include "estore/metadata/metadata_node.h"

namespace estore {

MetadataNode::MetadataNode(Simulator& sim, NodeId self, const Cluster& cluster)
    : NodeBase(sim, self), store_(cluster.partitions, cluster.config.lease_duration) {}

void MetadataNode::on_message(const NodeId& from, const json& msg) {
  const std::string& type = msg.at("type").get_ref<const std::string&>();

  if (type == "AcquireLease") {
    auto r = store_.acquire_lease(from, now());
    if (r.ok) {
      note({{"ev", "lease_grant"}, {"otm", from}, {"epoch", r.lease.epoch},
            {"expires_at", r.lease.expires_at}});
    }
    reply(from, msg, {{"type", "AcquireLeaseResp"}, {"ok", r.ok}, {"lease", r.lease},
                      {"reason", r.reason}});
  } else if (type == "RenewLease") {
    auto r = store_.renew_lease(from, msg.at("epoch").get<Epoch>(), now());
    note({{"ev", r.ok ? "lease_renew" : "lease_renew_rejected"}, {"otm", from},
          {"epoch", msg.at("epoch")}, {"expires_at", r.lease.expires_at}});
    reply(from, msg, {{"type", "RenewLeaseResp"}, {"ok", r.ok}, {"lease", r.lease},
                      {"reason", r.reason}});
  } else if (type == "ReleaseLease") {
    const auto otm = msg.at("otm").get<NodeId>();
    const auto epoch = msg.at("epoch").get<Epoch>();
    const bool ok = store_.release_lease(otm, epoch);
    if (ok) note({{"ev", "lease_release"}, {"otm", otm}, {"epoch", epoch}});
    reply(from, msg, {{"type", "ReleaseLeaseResp"}, {"ok", ok}});
  } else if (type == "CasAssign") {
    const auto p = msg.at("partition").get<PartitionId>();
    const auto owner = msg.at("owner").get<NodeId>();
    auto r = store_.cas_assign(p, msg.at("expected_version").get<std::uint64_t>(), owner, now());
    if (r.status == CasResult::Status::kOk) {
      note({{"ev", "cas_ok"}, {"partition", p}, {"version", r.entry.version},
            {"owner", owner}, {"ownership_epoch", r.entry.ownership_epoch}});
    } else {
      note({{"ev", "cas_fail"}, {"partition", p}, {"status", cas_status_name(r.status)},
            {"owner", owner}});
    }
    reply(from, msg, {{"type", "CasAssignResp"}, {"status", cas_status_name(r.status)},
                      {"entry", r.entry}, {"reason", r.reason}});
  } else if (type == "GetMap") {
    reply(from, msg, {{"type", "GetMapResp"}, {"map", store_.snapshot()}});
  } else if (type == "ExpiredLessees") {
    json out = json::array();
    for (const auto& lease : store_.expired_lessees(now())) {
      out.push_back({{"otm", lease.otm}, {"epoch", lease.epoch}});
    }
    reply(from, msg, {{"type", "ExpiredLesseesResp"}, {"lessees", std::move(out)}});
  }
}

}  // namespace estore
