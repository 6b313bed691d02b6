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

#include "estore/master/decision_ledger.h"

namespace estore {

Decision DecisionLedger::record(const std::string& mtx_id, Decision decision,
                                const std::vector<PartitionId>& participants) {
  auto [it, inserted] =
      records_.try_emplace(mtx_id, MtxDecisionRecord{mtx_id, decision, participants});
  return it->second.decision;
}

std::optional<Decision> DecisionLedger::lookup(const std::string& mtx_id) const {
  auto it = records_.find(mtx_id);
  if (it == records_.end()) return std::nullopt;
  return it->second.decision;
}

}  // namespace estore
