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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "estore/config.h"
#include "estore/otm/lock_table.h"
#include "estore/otm/log_record.h"
#include "estore/otm/recovery.h"

namespace estore {

// Destination for a partition's write-ahead log. Unforced records may sit
// in a volatile buffer until the next forced append.
class LogSink {
 public:
  virtual ~LogSink() = default;
  // Throws FencingError when the log can no longer be written.
  virtual Lsn append(const LogRecord& record, bool force) = 0;
};

// In-memory sink for tests: records that were never forced are lost by
// crash().
class MemoryLog : public LogSink {
 public:
  Lsn append(const LogRecord& record, bool force) override;
  void crash() { buffer_.clear(); }
  void fence() { fenced_ = true; }
  const std::vector<std::string>& durable() const { return durable_; }

 private:
  std::vector<std::string> durable_;
  std::vector<std::string> buffer_;
  bool fenced_ = false;
};

// Observation hooks; the OTM node turns these into trace records.
class EngineListener {
 public:
  virtual ~EngineListener() = default;
  // 'reader' is a txn id string or "m:<mtx_id>".
  virtual void on_read(const std::string& /*reader*/, const Key& /*key*/,
                       const std::optional<Value>& /*value*/, bool /*own_write*/) {}
  virtual void on_install(const std::string& /*writer*/, const Key& /*key*/,
                          const Value& /*value*/) {}
  virtual void on_commit(const TxnId& /*txn*/, Lsn /*lsn*/) {}
  virtual void on_abort(const TxnId& /*txn*/, std::string_view /*reason*/) {}
  virtual void on_release(const std::string& /*owner*/, const std::vector<Key>& /*keys*/) {}
  // A queued read/write finished after its lock was granted.
  virtual void on_resume(const TxnId& /*txn*/, const std::optional<Value>& /*value*/) {}
  virtual void on_mtx_vote(const std::string& /*mtx_id*/, bool /*yes*/,
                           const std::map<Key, std::optional<Value>>& /*observed*/) {}
  virtual void on_mtx_applied(const std::string& /*mtx_id*/, Decision /*decision*/,
                              const std::map<Key, Value>& /*writes*/) {}
};

// One partition's transaction executor: strict 2PL with wait-die, no-steal
// buffering, force-at-commit logging, and the minitransaction participant.
class PartitionEngine {
 public:
  struct OpResult {
    enum class Status : std::uint8_t { kOk, kWait, kAborted, kError };
    Status status = Status::kOk;
    std::optional<Value> value;
    std::string reason;
  };
  struct CommitResult {
    enum class Status : std::uint8_t { kCommitted, kError };
    Status status = Status::kCommitted;
    Lsn lsn = 0;
    std::string reason;
  };
  struct VoteResult {
    bool yes = false;
    std::map<Key, std::optional<Value>> reads;
    std::string reason;
  };

  PartitionEngine(PartitionId id, KeyRange range, Epoch ownership_epoch, LogSink& log,
                  Mutations mutations = {}, EngineListener* listener = nullptr);

  // Installs recovered state. In-doubt minitransactions re-take their locks.
  void load(const RecoveredState& state);

  OpResult begin(const TxnId& txn, SimTime now);
  OpResult read(const TxnId& txn, const Key& key, SimTime now);
  OpResult write(const TxnId& txn, const Key& key, const Value& value, SimTime now);
  // Throws FencingError after aborting the transaction locally if the log
  // is gone.
  CommitResult commit(const TxnId& txn, SimTime now);
  void abort(const TxnId& txn, std::string_view reason);
  void abort_all(std::string_view reason);
  std::vector<TxnId> idle_txns(SimTime now, SimTime idle_for) const;

  // Single-key committed read outside any transaction.
  std::optional<Value> read_committed(const Key& key) const;

  VoteResult mtx_vote(const std::string& mtx_id, const MtxFragment& fragment,
                      const std::vector<PartitionId>& participants);
  // Returns false if there was nothing in doubt for 'mtx_id'.
  bool mtx_decide(const std::string& mtx_id, Decision decision);
  // Durable vote for 'mtx_id'; a participant that never voted records NO.
  bool vote_query(const std::string& mtx_id);
  std::vector<std::string> in_doubt() const;
  const std::map<std::string, MtxRecord>& mtx_records() const { return mtx_; }

  Lsn checkpoint();
  void append_handoff();

  PartitionId id() const { return id_; }
  const KeyRange& range() const { return range_; }
  Epoch ownership_epoch() const { return epoch_; }
  const std::map<Key, Value>& committed() const { return committed_; }
  std::size_t active_count() const { return txns_.size(); }
  bool has_txn(const TxnId& txn) const { return txns_.count(txn) > 0; }
  std::uint32_t commits_since_checkpoint() const { return commits_since_checkpoint_; }
  // Commits since the last call.
  std::uint64_t take_load();

 private:
  enum class PendingOp : std::uint8_t { kNone, kRead, kWrite };
  struct Txn {
    TxnId id;
    LockHolder handle = 0;
    std::map<Key, Value> write_buffer;
    std::set<Key> read_set;
    PendingOp pending = PendingOp::kNone;
    Key pending_key;
    Value pending_value;
    SimTime last_activity = 0;
  };
  struct Owner {
    bool is_mtx = false;
    TxnId txn;
    std::string mtx_id;
  };

  Txn* find(const TxnId& txn);
  void finish(Txn& txn, std::string_view reason, bool committed);
  void release(LockHolder handle, const std::string& owner_name);
  void resume(const std::vector<LockTable::Grant>& grants);
  void install(const std::string& writer, const std::map<Key, Value>& writes);
  LogRecord record(LogKind kind) const;

  PartitionId id_;
  KeyRange range_;
  Epoch epoch_;
  LogSink& log_;
  Mutations mutations_;
  EngineListener* listener_;
  EngineListener null_listener_;

  std::map<Key, Value> committed_;
  LockTable locks_;
  std::map<TxnId, Txn> txns_;
  std::map<LockHolder, Owner> owners_;
  std::map<std::string, MtxRecord> mtx_;
  std::map<std::string, LockHolder> mtx_handles_;
  std::set<std::string> applied_early_;
  LockHolder next_handle_ = 1;
  std::uint32_t commits_since_checkpoint_ = 0;
  std::uint64_t load_ = 0;
};

}  // namespace estore
