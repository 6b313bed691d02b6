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

#include "estore/otm/lock_table.h"

namespace estore {

bool LockTable::satisfied(const Entry& e, LockHolder h, LockMode mode) {
  if (e.exclusive == h) return true;
  return mode == LockMode::kShared && e.sharers.count(h) > 0;
}

bool LockTable::compatible(const Entry& e, LockHolder h, LockMode mode) {
  if (e.exclusive && *e.exclusive != h) return false;
  if (mode == LockMode::kShared) return true;
  for (LockHolder s : e.sharers) {
    if (s != h) return false;
  }
  return true;
}

void LockTable::grant(Entry& e, const Key& key, LockHolder h, LockMode mode) {
  if (mode == LockMode::kExclusive) {
    e.sharers.erase(h);
    e.exclusive = h;
  } else {
    e.sharers.insert(h);
  }
  held_[h].insert(key);
}

LockTable::Acquire LockTable::acquire(const Key& key, LockHolder holder, LockMode mode) {
  Entry& e = entries_[key];
  if (satisfied(e, holder, mode)) return Acquire::kGranted;
  const bool upgrade = e.sharers.count(holder) > 0;
  if (compatible(e, holder, mode) && (e.queue.empty() || upgrade)) {
    grant(e, key, holder, mode);
    return Acquire::kGranted;
  }
  // Wait-die: every owner we would wait behind must be younger than us.
  auto younger = [holder](LockHolder other) { return other == holder || other > holder; };
  bool may_wait = true;
  if (e.exclusive && !younger(*e.exclusive)) may_wait = false;
  if (mode == LockMode::kExclusive) {
    for (LockHolder s : e.sharers) {
      if (!younger(s)) may_wait = false;
    }
  }
  for (const auto& w : e.queue) {
    if (!younger(w.holder)) may_wait = false;
  }
  if (!may_wait) {
    if (e.idle()) entries_.erase(key);
    return Acquire::kDie;
  }
  e.queue.push_back({holder, mode});
  waiting_on_[holder] = key;
  return Acquire::kWait;
}

bool LockTable::try_acquire(const Key& key, LockHolder holder, LockMode mode) {
  Entry& e = entries_[key];
  if (satisfied(e, holder, mode)) return true;
  const bool upgrade = e.sharers.count(holder) > 0;
  if (compatible(e, holder, mode) && (e.queue.empty() || upgrade)) {
    grant(e, key, holder, mode);
    return true;
  }
  if (e.idle()) entries_.erase(key);
  return false;
}

void LockTable::drain_queue(const Key& key, Entry& e, std::vector<Grant>& out) {
  while (!e.queue.empty()) {
    const Waiter w = e.queue.front();
    if (!compatible(e, w.holder, w.mode)) break;
    e.queue.pop_front();
    waiting_on_.erase(w.holder);
    grant(e, key, w.holder, w.mode);
    out.push_back({w.holder, key, w.mode});
  }
}

std::vector<LockTable::Grant> LockTable::release_all(LockHolder holder) {
  std::vector<Grant> out;
  std::set<Key> touched;
  if (auto w = waiting_on_.find(holder); w != waiting_on_.end()) {
    auto& q = entries_[w->second].queue;
    for (auto it = q.begin(); it != q.end(); ++it) {
      if (it->holder == holder) {
        q.erase(it);
        break;
      }
    }
    touched.insert(w->second);
    waiting_on_.erase(w);
  }
  if (auto h = held_.find(holder); h != held_.end()) {
    for (const auto& key : h->second) {
      Entry& e = entries_[key];
      e.sharers.erase(holder);
      if (e.exclusive == holder) e.exclusive.reset();
      touched.insert(key);
    }
    held_.erase(h);
  }
  for (const auto& key : touched) {
    Entry& e = entries_[key];
    drain_queue(key, e, out);
    if (e.idle()) entries_.erase(key);
  }
  return out;
}

bool LockTable::holds(const Key& key, LockHolder holder, LockMode mode) const {
  auto it = entries_.find(key);
  return it != entries_.end() && satisfied(it->second, holder, mode);
}

std::vector<Key> LockTable::held_by(LockHolder holder) const {
  auto it = held_.find(holder);
  if (it == held_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

}  // namespace estore
