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

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "estore/otm/log_record.h"

namespace estore {

struct RecoveredState {
  std::map<Key, Value> store;
  std::map<std::string, MtxRecord> mtx;
  std::optional<Lsn> checkpoint_lsn;
  // Committed transactions and minitransactions re-applied after the
  // checkpoint.
  std::size_t redo_count = 0;
  std::size_t records_scanned = 0;
  bool torn_tail = false;
  // Highest writer epoch seen in the log.
  Epoch max_epoch = 0;
};

// Redo-only recovery for a no-steal log: start from the newest CHECKPOINT
// image (or empty) and re-apply the updates of every transaction whose
// COMMIT is present, plus minitransaction writes whose COMMIT decision is
// present. Undecided YES votes come back in doubt. A record that fails to
// decode ends the log; nothing after it is trusted.
RecoveredState recover_partition(const std::vector<std::string>& records);

}  // namespace estore
