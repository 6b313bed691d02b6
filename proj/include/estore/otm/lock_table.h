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
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "estore/types.h"

namespace estore {

enum class LockMode : std::uint8_t { kShared, kExclusive };

// Opaque lock owner. Lower values are older for wait-die.
using LockHolder = std::uint64_t;

// Key-granularity shared/exclusive locks with wait-die deadlock avoidance.
//
// A requester may only wait if it is older than every incompatible holder
// and every waiter already queued on the key; otherwise it dies. All waits
// therefore point from older to younger owners and no cycle can form.
class LockTable {
 public:
  enum class Acquire : std::uint8_t { kGranted, kWait, kDie };

  // A queued request that has now been granted.
  struct Grant {
    LockHolder holder;
    Key key;
    LockMode mode;
  };

  Acquire acquire(const Key& key, LockHolder holder, LockMode mode);
  // Never queues. Used by minitransaction participants.
  bool try_acquire(const Key& key, LockHolder holder, LockMode mode);

  // Drops every lock and queued request of 'holder'; returns queued
  // requests that became grantable, in grant order.
  std::vector<Grant> release_all(LockHolder holder);

  bool holds(const Key& key, LockHolder holder, LockMode mode) const;
  std::vector<Key> held_by(LockHolder holder) const;
  bool waiting(LockHolder holder) const { return waiting_on_.count(holder) > 0; }
  bool empty() const { return entries_.empty(); }

 private:
  struct Waiter {
    LockHolder holder;
    LockMode mode;
  };
  struct Entry {
    std::set<LockHolder> sharers;
    std::optional<LockHolder> exclusive;
    std::deque<Waiter> queue;

    bool idle() const { return sharers.empty() && !exclusive && queue.empty(); }
  };

  static bool satisfied(const Entry& e, LockHolder h, LockMode mode);
  static bool compatible(const Entry& e, LockHolder h, LockMode mode);
  void grant(Entry& e, const Key& key, LockHolder h, LockMode mode);
  void drain_queue(const Key& key, Entry& e, std::vector<Grant>& out);

  std::map<Key, Entry> entries_;
  std::map<LockHolder, std::set<Key>> held_;
  std::map<LockHolder, Key> waiting_on_;
};

}  // namespace estore
