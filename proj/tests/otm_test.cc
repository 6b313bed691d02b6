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

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "estore/kernel/rng.h"
#include "estore/kernel/simulator.h"
#include "estore/otm/lock_table.h"
#include "estore/otm/log_record.h"
#include "estore/otm/partition_engine.h"
#include "estore/otm/recovery.h"
#include "micro_history.h"

namespace estore {
namespace {

using Acquire = LockTable::Acquire;
using Status = PartitionEngine::OpResult::Status;

const KeyRange kAll{"", ""};

TxnId txn(std::uint64_t n) { return TxnId{1, n}; }

std::vector<LogRecord> decode_all(const std::vector<std::string>& records) {
  std::vector<LogRecord> out;
  for (const auto& r : records) {
    auto d = decode_record(r);
    EXPECT_TRUE(d.has_value());
    if (d) out.push_back(*d);
  }
  return out;
}

// ---- LockTable ----

TEST(LockTableTest, SharedLocksAreCompatible) {
  LockTable t;
  EXPECT_EQ(t.acquire("k", 1, LockMode::kShared), Acquire::kGranted);
  EXPECT_EQ(t.acquire("k", 2, LockMode::kShared), Acquire::kGranted);
  EXPECT_TRUE(t.holds("k", 1, LockMode::kShared));
  EXPECT_TRUE(t.holds("k", 2, LockMode::kShared));
}

TEST(LockTableTest, OlderWaitsYoungerDies) {
  LockTable t;
  ASSERT_EQ(t.acquire("k", 5, LockMode::kExclusive), Acquire::kGranted);
  EXPECT_EQ(t.acquire("k", 9, LockMode::kShared), Acquire::kDie);
  EXPECT_EQ(t.acquire("k", 2, LockMode::kExclusive), Acquire::kWait);
  EXPECT_TRUE(t.waiting(2));
  const auto grants = t.release_all(5);
  ASSERT_EQ(grants.size(), 1u);
  EXPECT_EQ(grants[0].holder, 2u);
  EXPECT_EQ(grants[0].key, "k");
  EXPECT_TRUE(t.holds("k", 2, LockMode::kExclusive));
  EXPECT_FALSE(t.waiting(2));
}

TEST(LockTableTest, UpgradeAndTryAcquire) {
  LockTable t;
  ASSERT_EQ(t.acquire("k", 1, LockMode::kShared), Acquire::kGranted);
  EXPECT_EQ(t.acquire("k", 1, LockMode::kExclusive), Acquire::kGranted);
  EXPECT_FALSE(t.try_acquire("k", 0, LockMode::kShared));
  EXPECT_FALSE(t.waiting(0));
  t.release_all(1);
  EXPECT_TRUE(t.empty());
  EXPECT_TRUE(t.try_acquire("k", 0, LockMode::kShared));
}

// Under wait-die every wait points from an older to a younger holder, so
// random workloads never leave everyone blocked.
TEST(LockTablePropertyTest, NoDeadlockUnderRandomRequests) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng(seed);
    LockTable t;
    std::set<LockHolder> active;
    LockHolder next = 1;
    for (int step = 0; step < 200; ++step) {
      if (active.size() < 4 || rng.chance(0.2)) active.insert(next++);
      std::vector<LockHolder> runnable;
      for (LockHolder h : active) {
        if (!t.waiting(h)) runnable.push_back(h);
      }
      ASSERT_FALSE(runnable.empty()) << "all holders blocked, seed " << seed;
      const LockHolder h = runnable[rng.uniform(0, runnable.size() - 1)];
      if (rng.chance(0.25)) {
        t.release_all(h);
        active.erase(h);
        continue;
      }
      const Key k = "k" + std::to_string(rng.uniform(0, 3));
      const auto mode = rng.chance(0.5) ? LockMode::kShared : LockMode::kExclusive;
      if (t.acquire(k, h, mode) == Acquire::kDie) {
        t.release_all(h);
        active.erase(h);
      }
    }
  }
}

// ---- Log records ----

TEST(LogRecordTest, RoundTripEveryKind) {
  MtxFragment f;
  f.compares["a"] = "1";
  f.compares["b"] = std::nullopt;
  f.reads = {"c"};
  f.writes = {{"d", "v"}};
  std::vector<LogRecord> records(8);
  records[0].kind = LogKind::kBegin;
  records[1].kind = LogKind::kUpdate;
  records[1].key = "k";
  records[1].value = std::string("v\0w", 3);
  records[2].kind = LogKind::kCommit;
  records[3].kind = LogKind::kAbort;
  records[4].kind = LogKind::kCheckpoint;
  records[4].image.store = {{"x", "1"}};
  records[4].image.mtx["m"] = MtxRecord{true, std::nullopt, f, {0, 2}};
  records[5].kind = LogKind::kMtxVote;
  records[5].mtx_id = "c0-3";
  records[5].vote_yes = true;
  records[5].fragment = f;
  records[5].participants = {0, 1, 2};
  records[6].kind = LogKind::kMtxDecision;
  records[6].mtx_id = "c0-3";
  records[6].decision = Decision::kCommit;
  records[7].kind = LogKind::kHandoff;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].epoch = 7 + i;
    // Only transaction records carry a txn id.
    if (records[i].kind <= LogKind::kAbort) records[i].txn = TxnId{3, i};
    const std::string bytes = encode_record(records[i]);
    auto back = decode_record(bytes);
    ASSERT_TRUE(back.has_value()) << i;
    EXPECT_EQ(*back, records[i]) << i;
    EXPECT_FALSE(decode_record(bytes.substr(0, bytes.size() - 1)).has_value()) << i;
  }
}

TEST(LogRecordTest, TxnIdText) {
  const TxnId id{4, 17};
  EXPECT_EQ(TxnId::parse(id.str()), id);
  EXPECT_LT(TxnId({1, 9}), TxnId({2, 0}));
}

// ---- Recovery ----

LogRecord rec(LogKind kind, std::uint64_t t, Key key = {}, Value value = {}) {
  LogRecord r;
  r.kind = kind;
  r.epoch = 1;
  r.txn = txn(t);
  r.key = std::move(key);
  r.value = std::move(value);
  return r;
}

TEST(RecoveryTest, UncommittedTailIsIgnored) {
  const std::vector<std::string> log{
      encode_record(rec(LogKind::kBegin, 1)), encode_record(rec(LogKind::kUpdate, 1, "k", "1")),
      encode_record(rec(LogKind::kCommit, 1)), encode_record(rec(LogKind::kBegin, 2)),
      encode_record(rec(LogKind::kUpdate, 2, "k", "2"))};
  const auto s = recover_partition(log);
  EXPECT_EQ(s.store, (std::map<Key, Value>{{"k", "1"}}));
  EXPECT_EQ(s.redo_count, 1u);
}

TEST(RecoveryTest, EmptyLogGivesEmptyStore) {
  const auto s = recover_partition({});
  EXPECT_TRUE(s.store.empty());
  EXPECT_FALSE(s.checkpoint_lsn.has_value());
}

TEST(RecoveryTest, CheckpointThenRedo) {
  LogRecord cp;
  cp.kind = LogKind::kCheckpoint;
  cp.epoch = 2;
  cp.image.store = {{"a", "old"}, {"b", "keep"}};
  const std::vector<std::string> log{
      encode_record(rec(LogKind::kBegin, 1)), encode_record(rec(LogKind::kUpdate, 1, "z", "gone")),
      encode_record(cp), encode_record(rec(LogKind::kBegin, 2)),
      encode_record(rec(LogKind::kUpdate, 2, "a", "new")), encode_record(rec(LogKind::kCommit, 2))};
  const auto s = recover_partition(log);
  EXPECT_EQ(s.store, (std::map<Key, Value>{{"a", "new"}, {"b", "keep"}}));
  EXPECT_EQ(s.checkpoint_lsn, 2u);
  EXPECT_EQ(s.max_epoch, 2u);
}

TEST(RecoveryTest, TornTailEndsTheLog) {
  std::vector<std::string> log{encode_record(rec(LogKind::kBegin, 1)),
                               encode_record(rec(LogKind::kUpdate, 1, "k", "1"))};
  const std::string commit = encode_record(rec(LogKind::kCommit, 1));
  log.push_back(commit.substr(0, commit.size() - 2));
  const auto s = recover_partition(log);
  EXPECT_TRUE(s.torn_tail);
  EXPECT_TRUE(s.store.empty());
}

TEST(RecoveryTest, MtxVoteWithoutDecisionIsInDoubt) {
  LogRecord vote;
  vote.kind = LogKind::kMtxVote;
  vote.mtx_id = "m1";
  vote.vote_yes = true;
  vote.fragment.writes = {{"k", "m"}};
  vote.participants = {0, 1};
  LogRecord vote2 = vote;
  vote2.mtx_id = "m2";
  LogRecord decision;
  decision.kind = LogKind::kMtxDecision;
  decision.mtx_id = "m2";
  decision.decision = Decision::kCommit;
  const auto s = recover_partition({encode_record(vote), encode_record(vote2),
                                    encode_record(decision)});
  ASSERT_EQ(s.mtx.size(), 2u);
  EXPECT_TRUE(s.mtx.at("m1").in_doubt());
  EXPECT_FALSE(s.mtx.at("m2").in_doubt());
  EXPECT_EQ(s.store, (std::map<Key, Value>{{"k", "m"}}));
}

// Crash after every prefix of a random log: the recovered store is exactly
// the effect of the transactions whose COMMIT made it into the prefix.
TEST(RecoveryPropertyTest, EveryPrefixMatchesCommittedOracle) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    std::vector<LogRecord> log;
    const std::uint64_t txns = rng.uniform(1, 12);
    for (std::uint64_t t = 1; t <= txns; ++t) {
      log.push_back(rec(LogKind::kBegin, t));
      const std::uint64_t writes = rng.uniform(0, 3);
      for (std::uint64_t w = 0; w < writes; ++w) {
        log.push_back(rec(LogKind::kUpdate, t, "k" + std::to_string(rng.uniform(0, 4)),
                          std::to_string(t) + "." + std::to_string(w)));
      }
      log.push_back(rec(rng.chance(0.8) ? LogKind::kCommit : LogKind::kAbort, t));
    }
    std::vector<std::string> bytes;
    for (const auto& r : log) bytes.push_back(encode_record(r));
    for (std::size_t n = 0; n <= bytes.size(); ++n) {
      std::map<Key, Value> oracle;
      std::map<std::uint64_t, std::map<Key, Value>> pending;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& r = log[i];
        if (r.kind == LogKind::kUpdate) pending[r.txn.counter][r.key] = r.value;
        if (r.kind == LogKind::kCommit) {
          for (const auto& [k, v] : pending[r.txn.counter]) oracle[k] = v;
        }
      }
      const std::vector<std::string> prefix(bytes.begin(), bytes.begin() + n);
      EXPECT_EQ(recover_partition(prefix).store, oracle) << "seed " << seed << " n " << n;
      if (n < bytes.size()) {
        auto torn = prefix;
        torn.push_back(bytes[n].substr(0, bytes[n].size() / 2));
        EXPECT_EQ(recover_partition(torn).store, oracle) << "torn, seed " << seed << " n " << n;
      }
    }
  }
}

// ---- PartitionEngine ----

TEST(EngineTest, ReadsNilThenOwnWrite) {
  MemoryLog log;
  PartitionEngine e(0, kAll, 1, log);
  e.begin(txn(1), 0);
  auto r = e.read(txn(1), "a", 0);
  ASSERT_EQ(r.status, Status::kOk);
  EXPECT_FALSE(r.value.has_value());
  ASSERT_EQ(e.write(txn(1), "a", "1", 0).status, Status::kOk);
  r = e.read(txn(1), "a", 0);
  EXPECT_EQ(r.value, "1");
  EXPECT_TRUE(e.committed().empty());
  ASSERT_EQ(e.commit(txn(1), 0).status, PartitionEngine::CommitResult::Status::kCommitted);
  EXPECT_EQ(e.read_committed("a"), "1");
}

TEST(EngineTest, YoungerRequesterDies) {
  MemoryLog log;
  PartitionEngine e(0, kAll, 1, log);
  e.begin(txn(1), 0);
  e.begin(txn(2), 0);
  ASSERT_EQ(e.write(txn(1), "a", "x", 0).status, Status::kOk);
  EXPECT_EQ(e.read(txn(2), "a", 0).status, Status::kAborted);
  EXPECT_FALSE(e.has_txn(txn(2)));
  EXPECT_TRUE(e.has_txn(txn(1)));
}

TEST(EngineTest, ReadOnlyCommitLogsNoUpdates) {
  MemoryLog log;
  PartitionEngine e(0, kAll, 1, log);
  e.begin(txn(1), 0);
  e.read(txn(1), "a", 0);
  e.commit(txn(1), 0);
  const auto records = decode_all(log.durable());
  ASSERT_FALSE(records.empty());
  EXPECT_EQ(records.back().kind, LogKind::kCommit);
  for (const auto& r : records) EXPECT_NE(r.kind, LogKind::kUpdate);
}

TEST(EngineTest, CommitIsForced) {
  MemoryLog log;
  PartitionEngine e(0, kAll, 1, log);
  e.begin(txn(1), 0);
  e.write(txn(1), "a", "1", 0);
  e.commit(txn(1), 0);
  log.crash();
  EXPECT_EQ(recover_partition(log.durable()).store, e.committed());
}

TEST(EngineTest, UnforcedCommitMutationCanLoseAcknowledgedWrite) {
  MemoryLog log;
  Mutations m;
  m.skip_forced_commit = true;
  PartitionEngine e(0, kAll, 1, log, m);
  e.begin(txn(1), 0);
  e.write(txn(1), "a", "1", 0);
  e.commit(txn(1), 0);
  log.crash();
  EXPECT_NE(recover_partition(log.durable()).store, e.committed());
}

TEST(EngineTest, FencedCommitThrowsAndReleases) {
  MemoryLog log;
  PartitionEngine e(0, kAll, 1, log);
  e.begin(txn(1), 0);
  e.write(txn(1), "a", "1", 0);
  log.fence();
  EXPECT_THROW(e.commit(txn(1), 0), FencingError);
  EXPECT_FALSE(e.has_txn(txn(1)));
  EXPECT_TRUE(e.committed().empty());
}

TEST(EngineTest, KeyOutsideRangeIsError) {
  MemoryLog log;
  PartitionEngine e(0, KeyRange{"b", "c"}, 1, log);
  e.begin(txn(1), 0);
  EXPECT_EQ(e.read(txn(1), "a", 0).status, Status::kError);
  EXPECT_EQ(e.write(txn(1), "c", "v", 0).status, Status::kError);
}

TEST(EngineMtxTest, EmptyCompareVotesYes) {
  MemoryLog log;
  PartitionEngine e(0, kAll, 1, log);
  MtxFragment f;
  f.writes = {{"a", "1"}};
  const auto v = e.mtx_vote("m", f, {0, 1});
  EXPECT_TRUE(v.yes);
  EXPECT_EQ(e.in_doubt(), std::vector<std::string>{"m"});
  EXPECT_TRUE(e.committed().empty());
  EXPECT_TRUE(e.vote_query("m"));
  EXPECT_TRUE(e.mtx_decide("m", Decision::kCommit));
  EXPECT_EQ(e.read_committed("a"), "1");
  EXPECT_FALSE(e.mtx_decide("m", Decision::kAbort));
  EXPECT_EQ(e.read_committed("a"), "1");
  EXPECT_EQ(recover_partition(log.durable()).store, e.committed());
}

TEST(EngineMtxTest, CompareMismatchVotesNoAndKeepsNoLocks) {
  MemoryLog log;
  PartitionEngine e(0, kAll, 1, log);
  e.begin(txn(1), 0);
  e.write(txn(1), "k", "3", 0);
  e.commit(txn(1), 0);
  MtxFragment f;
  f.compares["k"] = "5";
  f.writes = {{"k", "9"}};
  const auto v = e.mtx_vote("m", f, {0});
  EXPECT_FALSE(v.yes);
  EXPECT_TRUE(e.in_doubt().empty());
  EXPECT_FALSE(e.vote_query("m"));
  e.begin(txn(2), 0);
  EXPECT_EQ(e.write(txn(2), "k", "4", 0).status, Status::kOk);
}

TEST(EngineMtxTest, BusyKeyVotesNo) {
  MemoryLog log;
  PartitionEngine e(0, kAll, 1, log);
  e.begin(txn(1), 0);
  e.write(txn(1), "k", "x", 0);
  MtxFragment f;
  f.writes = {{"k", "m"}};
  EXPECT_FALSE(e.mtx_vote("m", f, {0}).yes);
  EXPECT_FALSE(e.vote_query("never-seen"));
}

TEST(EngineMtxTest, InDoubtSurvivesRecoveryAndHoldsLocks) {
  MemoryLog log;
  PartitionEngine e(0, kAll, 1, log);
  MtxFragment f;
  f.writes = {{"k", "m"}};
  ASSERT_TRUE(e.mtx_vote("m", f, {0, 1}).yes);
  log.crash();
  PartitionEngine again(0, kAll, 2, log);
  again.load(recover_partition(log.durable()));
  EXPECT_EQ(again.in_doubt(), std::vector<std::string>{"m"});
  again.begin(txn(5), 0);
  EXPECT_NE(again.write(txn(5), "k", "t", 0).status, Status::kOk);
  EXPECT_TRUE(again.mtx_decide("m", Decision::kAbort));
  EXPECT_TRUE(again.committed().empty());
}

TEST(EngineTest, CheckpointPreservesState) {
  MemoryLog log;
  PartitionEngine e(0, kAll, 1, log);
  for (std::uint64_t i = 1; i <= 5; ++i) {
    e.begin(txn(i), 0);
    e.write(txn(i), "k" + std::to_string(i % 3), std::to_string(i), 0);
    e.commit(txn(i), 0);
  }
  e.checkpoint();
  e.begin(txn(9), 0);
  e.write(txn(9), "z", "9", 0);
  e.commit(txn(9), 0);
  const auto s = recover_partition(log.durable());
  EXPECT_EQ(s.store, e.committed());
  EXPECT_TRUE(s.checkpoint_lsn.has_value());
  EXPECT_EQ(s.redo_count, 1u);
}

// ---- Micro-histories against a brute-force serial oracle ----

TEST(EngineHistoryTest, FiveHundredMicroHistoriesAreSerializable) {
  std::size_t total_committed = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    const MicroHistoryResult r = run_micro_history(seed);
    EXPECT_FALSE(r.deadlock) << "seed " << seed;
    EXPECT_TRUE(r.serializable) << "seed " << seed;
    EXPECT_TRUE(r.recovered) << "seed " << seed;
    EXPECT_TRUE(r.drained) << "seed " << seed;
    total_committed += r.committed;
  }
  EXPECT_GT(total_committed, 500u);
}

}  // namespace
}  // namespace estore
