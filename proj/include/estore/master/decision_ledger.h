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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "estore/types.h"

namespace estore {

struct MtxDecisionRecord {
  std::string mtx_id;
  Decision decision = Decision::kAbort;
  std::vector<PartitionId> participants;
};

// First write wins: once a minitransaction has a decision it never changes.
class DecisionLedger {
 public:
  // Returns the decision now on record, which is 'decision' only if none
  // existed before.
  Decision record(const std::string& mtx_id, Decision decision,
                  const std::vector<PartitionId>& participants);
  std::optional<Decision> lookup(const std::string& mtx_id) const;
  std::size_t size() const { return records_.size(); }

 private:
  std::map<std::string, MtxDecisionRecord> records_;
};

}  // namespace estore
