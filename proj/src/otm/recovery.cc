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

#include "estore/otm/recovery.h"

#include <algorithm>

namespace estore {

RecoveredState recover_partition(const std::vector<std::string>& records) {
  RecoveredState out;
  std::vector<LogRecord> log;
  log.reserve(records.size());
  for (const auto& bytes : records) {
    auto rec = decode_record(bytes);
    if (!rec) {
      out.torn_tail = true;
      break;
    }
    log.push_back(std::move(*rec));
  }
  out.records_scanned = log.size();
  for (const auto& rec : log) out.max_epoch = std::max(out.max_epoch, rec.epoch);

  std::size_t start = 0;
  for (std::size_t i = log.size(); i-- > 0;) {
    if (log[i].kind == LogKind::kCheckpoint) {
      out.store = log[i].image.store;
      out.mtx = log[i].image.mtx;
      out.checkpoint_lsn = i;
      start = i + 1;
      break;
    }
  }

  std::map<TxnId, std::vector<std::pair<Key, Value>>> pending;
  for (std::size_t i = start; i < log.size(); ++i) {
    const LogRecord& rec = log[i];
    switch (rec.kind) {
      case LogKind::kBegin:
        pending[rec.txn];
        break;
      case LogKind::kUpdate:
        pending[rec.txn].emplace_back(rec.key, rec.value);
        break;
      case LogKind::kCommit: {
        auto it = pending.find(rec.txn);
        if (it != pending.end()) {
          for (auto& [k, v] : it->second) out.store[k] = v;
          pending.erase(it);
        }
        ++out.redo_count;
        break;
      }
      case LogKind::kAbort:
        pending.erase(rec.txn);
        break;
      case LogKind::kMtxVote: {
        MtxRecord& m = out.mtx[rec.mtx_id];
        if (m.decision) break;
        m.yes = rec.vote_yes;
        m.participants = rec.participants;
        m.fragment = rec.vote_yes ? rec.fragment : MtxFragment{};
        break;
      }
      case LogKind::kMtxDecision: {
        auto it = out.mtx.find(rec.mtx_id);
        if (it == out.mtx.end() || !it->second.in_doubt()) break;
        if (rec.decision == Decision::kCommit) {
          for (const auto& [k, v] : it->second.fragment.writes) out.store[k] = v;
          ++out.redo_count;
        }
        it->second.decision = rec.decision;
        it->second.fragment = MtxFragment{};
        break;
      }
      case LogKind::kCheckpoint:
      case LogKind::kHandoff:
        break;
    }
  }
  return out;
}

}  // namespace estore
