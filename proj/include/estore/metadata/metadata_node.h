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

#include "estore/config.h"
#include "estore/kernel/node_base.h"
#include "estore/metadata/metadata_store.h"

namespace estore {

// Serves the metadata store over messages:
//   AcquireLease{} / RenewLease{epoch} / ReleaseLease{otm, epoch}
//   CasAssign{partition, expected_version, owner}
//   GetMap{} / ExpiredLessees{}
// Each response is "<Request>Resp" and echoes the request id.
//
// Modeled as a single node that never crashes.
class MetadataNode : public NodeBase {
 public:
  MetadataNode(Simulator& sim, NodeId self, const Cluster& cluster);

  void on_message(const NodeId& from, const json& msg) override;

  const MetadataStore& store() const { return store_; }

 private:
  MetadataStore store_;
};

}  // namespace estore
