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

// Random micro-histories (at most five transactions over at most five keys)
// driven through one PartitionEngine with a random interleaving, then
// compared against every serial order of the committed transactions.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "estore/kernel/rng.h"
#include "estore/otm/partition_engine.h"
#include "estore/otm/recovery.h"

namespace estore {

struct MicroHistoryResult {
  bool deadlock = false;
  bool serializable = false;
  // Recovery of the durable log reproduces the committed store.
  bool recovered = false;
  // No transaction is left open.
  bool drained = false;
  std::size_t committed = 0;
};

namespace micro {

struct Step {
  bool write = false;
  Key key;
  Value value;
};

struct HistTxn {
  TxnId id;
  std::vector<Step> steps;
  std::vector<std::optional<Value>> seen;
  std::size_t next = 0;
  bool waiting = false;
  bool done = false;
  bool committed = false;
};

class Capture : public EngineListener {
 public:
  explicit Capture(std::map<TxnId, HistTxn*>* txns) : txns_(txns) {}
  void on_resume(const TxnId& t, const std::optional<Value>& v) override {
    HistTxn* h = txns_->at(t);
    h->seen[h->next++] = v;
    h->waiting = false;
  }
  void on_abort(const TxnId& t, std::string_view /*reason*/) override {
    HistTxn* h = txns_->at(t);
    h->done = true;
    h->waiting = false;
  }

 private:
  std::map<TxnId, HistTxn*>* txns_;
};

inline bool serial_matches(const std::vector<const HistTxn*>& order,
                           const std::map<Key, Value>& final_store) {
  std::map<Key, Value> db;
  for (const HistTxn* t : order) {
    std::map<Key, Value> local = db;
    for (std::size_t i = 0; i < t->steps.size(); ++i) {
      const Step& s = t->steps[i];
      if (s.write) {
        local[s.key] = s.value;
        continue;
      }
      auto it = local.find(s.key);
      const std::optional<Value> expect =
          it == local.end() ? std::nullopt : std::optional<Value>(it->second);
      if (expect != t->seen[i]) return false;
    }
    db = std::move(local);
  }
  return db == final_store;
}

inline bool some_serial_order(std::vector<const HistTxn*> committed,
                              const std::map<Key, Value>& final_store) {
  std::sort(committed.begin(), committed.end());
  do {
    if (serial_matches(committed, final_store)) return true;
  } while (std::next_permutation(committed.begin(), committed.end()));
  return false;
}

}  // namespace micro

inline MicroHistoryResult run_micro_history(std::uint64_t seed) {
  using micro::HistTxn;
  using Status = PartitionEngine::OpResult::Status;
  MicroHistoryResult result;
  Rng rng(seed);
  std::vector<HistTxn> hist(rng.uniform(1, 5));
  std::map<TxnId, HistTxn*> by_id;
  const std::uint64_t keys = rng.uniform(1, 5);
  for (std::size_t i = 0; i < hist.size(); ++i) {
    HistTxn& h = hist[i];
    h.id = TxnId{1, i + 1};
    const std::uint64_t n = rng.uniform(1, 4);
    for (std::uint64_t j = 0; j < n; ++j) {
      micro::Step s;
      s.write = rng.chance(0.5);
      s.key = "k" + std::to_string(rng.uniform(0, keys - 1));
      if (s.write) s.value = std::to_string(i) + "." + std::to_string(j);
      h.steps.push_back(s);
    }
    h.seen.resize(h.steps.size());
    by_id[h.id] = &h;
  }
  MemoryLog log;
  micro::Capture capture(&by_id);
  PartitionEngine e(0, KeyRange{"", ""}, 1, log, {}, &capture);
  for (auto& h : hist) e.begin(h.id, 0);

  for (int guard = 0; guard < 1000; ++guard) {
    std::vector<HistTxn*> runnable;
    bool any_open = false;
    for (auto& h : hist) {
      if (h.done) continue;
      any_open = true;
      if (!h.waiting) runnable.push_back(&h);
    }
    if (!any_open) break;
    if (runnable.empty()) {
      result.deadlock = true;
      return result;
    }
    HistTxn* h = runnable[rng.uniform(0, runnable.size() - 1)];
    if (h->next == h->steps.size()) {
      e.commit(h->id, 0);
      h->committed = true;
      h->done = true;
      continue;
    }
    if (rng.chance(0.05)) {
      e.abort(h->id, "client");
      h->done = true;
      continue;
    }
    const micro::Step& s = h->steps[h->next];
    const auto r = s.write ? e.write(h->id, s.key, s.value, 0) : e.read(h->id, s.key, 0);
    if (r.status == Status::kOk) {
      h->seen[h->next++] = r.value;
    } else if (r.status == Status::kWait) {
      h->waiting = true;
    } else {
      h->done = true;
    }
  }

  std::vector<const HistTxn*> committed;
  for (const auto& h : hist) {
    if (h.committed) committed.push_back(&h);
  }
  result.committed = committed.size();
  result.serializable = micro::some_serial_order(committed, e.committed());
  result.recovered = recover_partition(log.durable()).store == e.committed();
  result.drained = e.active_count() == 0;
  return result;
}

}  // namespace estore
