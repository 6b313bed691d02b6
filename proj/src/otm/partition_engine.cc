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

#include "estore/otm/partition_engine.h"

#include <utility>

#include "estore/kernel/simulator.h"

namespace estore {

Lsn MemoryLog::append(const LogRecord& record, bool force) {
  if (fenced_) throw FencingError("log fenced");
  buffer_.push_back(encode_record(record));
  const Lsn lsn = durable_.size() + buffer_.size() - 1;
  if (force) {
    for (auto& r : buffer_) durable_.push_back(std::move(r));
    buffer_.clear();
  }
  return lsn;
}

namespace {

std::string mtx_owner(const std::string& mtx_id) { return "m:" + mtx_id; }

}  // namespace

PartitionEngine::PartitionEngine(PartitionId id, KeyRange range, Epoch ownership_epoch,
                                 LogSink& log, Mutations mutations, EngineListener* listener)
    : id_(id),
      range_(std::move(range)),
      epoch_(ownership_epoch),
      log_(log),
      mutations_(mutations),
      listener_(listener ? listener : &null_listener_) {}

void PartitionEngine::load(const RecoveredState& state) {
  committed_ = state.store;
  mtx_ = state.mtx;
  for (const auto& [mtx_id, rec] : mtx_) {
    if (!rec.in_doubt()) continue;
    const LockHolder h = next_handle_++;
    owners_[h] = Owner{true, {}, mtx_id};
    mtx_handles_[mtx_id] = h;
    for (const Key& k : rec.fragment.lock_keys()) {
      const bool exclusive = rec.fragment.writes.count(k) > 0;
      locks_.try_acquire(k, h, exclusive ? LockMode::kExclusive : LockMode::kShared);
    }
  }
}

LogRecord PartitionEngine::record(LogKind kind) const {
  LogRecord rec;
  rec.kind = kind;
  rec.epoch = epoch_;
  return rec;
}

PartitionEngine::Txn* PartitionEngine::find(const TxnId& txn) {
  auto it = txns_.find(txn);
  return it == txns_.end() ? nullptr : &it->second;
}

PartitionEngine::OpResult PartitionEngine::begin(const TxnId& txn, SimTime now) {
  if (txns_.count(txn)) return {OpResult::Status::kError, std::nullopt, "duplicate txn"};
  Txn t;
  t.id = txn;
  t.handle = next_handle_++;
  t.last_activity = now;
  owners_[t.handle] = Owner{false, txn, {}};
  txns_.emplace(txn, std::move(t));
  return {};
}

PartitionEngine::OpResult PartitionEngine::read(const TxnId& id, const Key& key, SimTime now) {
  Txn* t = find(id);
  if (!t) return {OpResult::Status::kError, std::nullopt, "unknown txn"};
  if (t->pending != PendingOp::kNone) return {OpResult::Status::kError, std::nullopt, "op pending"};
  if (!range_.contains(key)) return {OpResult::Status::kError, std::nullopt, "key outside partition"};
  t->last_activity = now;
  if (auto w = t->write_buffer.find(key); w != t->write_buffer.end()) {
    listener_->on_read(id.str(), key, w->second, true);
    return {OpResult::Status::kOk, w->second, {}};
  }
  switch (locks_.acquire(key, t->handle, LockMode::kShared)) {
    case LockTable::Acquire::kGranted: {
      t->read_set.insert(key);
      std::optional<Value> v;
      if (auto it = committed_.find(key); it != committed_.end()) v = it->second;
      listener_->on_read(id.str(), key, v, false);
      return {OpResult::Status::kOk, v, {}};
    }
    case LockTable::Acquire::kWait:
      t->pending = PendingOp::kRead;
      t->pending_key = key;
      return {OpResult::Status::kWait, std::nullopt, {}};
    case LockTable::Acquire::kDie:
      break;
  }
  finish(*t, "wait-die", false);
  return {OpResult::Status::kAborted, std::nullopt, "wait-die"};
}

PartitionEngine::OpResult PartitionEngine::write(const TxnId& id, const Key& key,
                                                 const Value& value, SimTime now) {
  Txn* t = find(id);
  if (!t) return {OpResult::Status::kError, std::nullopt, "unknown txn"};
  if (t->pending != PendingOp::kNone) return {OpResult::Status::kError, std::nullopt, "op pending"};
  if (!range_.contains(key)) return {OpResult::Status::kError, std::nullopt, "key outside partition"};
  t->last_activity = now;
  switch (locks_.acquire(key, t->handle, LockMode::kExclusive)) {
    case LockTable::Acquire::kGranted:
      t->write_buffer[key] = value;
      return {};
    case LockTable::Acquire::kWait:
      t->pending = PendingOp::kWrite;
      t->pending_key = key;
      t->pending_value = value;
      return {OpResult::Status::kWait, std::nullopt, {}};
    case LockTable::Acquire::kDie:
      break;
  }
  finish(*t, "wait-die", false);
  return {OpResult::Status::kAborted, std::nullopt, "wait-die"};
}

PartitionEngine::CommitResult PartitionEngine::commit(const TxnId& id, SimTime now) {
  Txn* t = find(id);
  if (!t) return {CommitResult::Status::kError, 0, "unknown txn"};
  if (t->pending != PendingOp::kNone) return {CommitResult::Status::kError, 0, "op pending"};
  t->last_activity = now;
  Lsn lsn = 0;
  try {
    LogRecord begin = record(LogKind::kBegin);
    begin.txn = id;
    log_.append(begin, false);
    for (const auto& [k, v] : t->write_buffer) {
      LogRecord up = record(LogKind::kUpdate);
      up.txn = id;
      up.key = k;
      up.value = v;
      log_.append(up, false);
    }
    LogRecord c = record(LogKind::kCommit);
    c.txn = id;
    lsn = log_.append(c, !mutations_.skip_forced_commit);
  } catch (const FencingError&) {
    finish(*t, "fenced", false);
    throw;
  }
  install(id.str(), t->write_buffer);
  ++commits_since_checkpoint_;
  ++load_;
  listener_->on_commit(id, lsn);
  finish(*t, {}, true);
  return {CommitResult::Status::kCommitted, lsn, {}};
}

void PartitionEngine::abort(const TxnId& id, std::string_view reason) {
  Txn* t = find(id);
  if (!t) return;
  finish(*t, reason, false);
}

void PartitionEngine::abort_all(std::string_view reason) {
  while (!txns_.empty()) finish(txns_.begin()->second, reason, false);
}

std::vector<TxnId> PartitionEngine::idle_txns(SimTime now, SimTime idle_for) const {
  std::vector<TxnId> out;
  for (const auto& [id, t] : txns_) {
    if (t.last_activity + idle_for <= now) out.push_back(id);
  }
  return out;
}

void PartitionEngine::finish(Txn& t, std::string_view reason, bool committed) {
  const TxnId id = t.id;
  const LockHolder h = t.handle;
  if (!committed) {
    LogRecord a = record(LogKind::kAbort);
    a.txn = id;
    try {
      log_.append(a, false);
    } catch (const FencingError&) {
      // An unforced ABORT carries no obligation.
    }
    listener_->on_abort(id, reason);
  }
  txns_.erase(id);
  release(h, id.str());
}

void PartitionEngine::release(LockHolder handle, const std::string& owner_name) {
  listener_->on_release(owner_name, locks_.held_by(handle));
  owners_.erase(handle);
  resume(locks_.release_all(handle));
}

void PartitionEngine::resume(const std::vector<LockTable::Grant>& grants) {
  for (const auto& g : grants) {
    auto o = owners_.find(g.holder);
    if (o == owners_.end() || o->second.is_mtx) continue;
    Txn* t = find(o->second.txn);
    if (!t || t->pending == PendingOp::kNone || t->pending_key != g.key) continue;
    std::optional<Value> v;
    if (t->pending == PendingOp::kRead) {
      t->read_set.insert(g.key);
      if (auto it = committed_.find(g.key); it != committed_.end()) v = it->second;
      listener_->on_read(t->id.str(), g.key, v, false);
    } else {
      t->write_buffer[g.key] = t->pending_value;
    }
    t->pending = PendingOp::kNone;
    t->pending_key.clear();
    t->pending_value.clear();
    listener_->on_resume(t->id, v);
  }
}

void PartitionEngine::install(const std::string& writer, const std::map<Key, Value>& writes) {
  for (const auto& [k, v] : writes) {
    committed_[k] = v;
    listener_->on_install(writer, k, v);
  }
}

std::optional<Value> PartitionEngine::read_committed(const Key& key) const {
  auto it = committed_.find(key);
  if (it == committed_.end()) return std::nullopt;
  return it->second;
}

PartitionEngine::VoteResult PartitionEngine::mtx_vote(const std::string& mtx_id,
                                                      const MtxFragment& fragment,
                                                      const std::vector<PartitionId>& participants) {
  VoteResult out;
  if (auto it = mtx_.find(mtx_id); it != mtx_.end()) {
    // Repeated round message: answer with the recorded vote.
    out.yes = it->second.yes && it->second.decision != Decision::kAbort;
    if (out.yes) {
      for (const Key& k : fragment.reads) out.reads[k] = read_committed(k);
    }
    out.reason = "duplicate";
    return out;
  }
  for (const Key& k : fragment.lock_keys()) {
    if (!range_.contains(k)) {
      out.reason = "key outside partition";
      break;
    }
  }

  const LockHolder h = next_handle_++;
  bool ok = out.reason.empty();
  std::map<Key, std::optional<Value>> observed;
  if (ok) {
    for (const Key& k : fragment.lock_keys()) {
      const bool exclusive = fragment.writes.count(k) > 0;
      if (!locks_.try_acquire(k, h, exclusive ? LockMode::kExclusive : LockMode::kShared)) {
        ok = false;
        out.reason = "lock busy";
        break;
      }
    }
  }
  if (ok) {
    for (const auto& [k, expected] : fragment.compares) {
      observed[k] = read_committed(k);
      if (observed[k] != expected) {
        ok = false;
        out.reason = "compare failed";
      }
    }
  }

  MtxRecord rec;
  rec.yes = ok;
  rec.participants = participants;
  LogRecord vote = record(LogKind::kMtxVote);
  vote.mtx_id = mtx_id;
  vote.vote_yes = ok;
  vote.participants = participants;
  if (ok) {
    rec.fragment = fragment;
    vote.fragment = fragment;
  }
  try {
    log_.append(vote, ok);
  } catch (const FencingError&) {
    resume(locks_.release_all(h));
    throw;
  }
  mtx_[mtx_id] = rec;
  listener_->on_mtx_vote(mtx_id, ok, observed);

  if (!ok) {
    resume(locks_.release_all(h));
    return out;
  }
  owners_[h] = Owner{true, {}, mtx_id};
  mtx_handles_[mtx_id] = h;
  out.yes = true;
  for (const Key& k : fragment.reads) {
    out.reads[k] = read_committed(k);
    listener_->on_read(mtx_owner(mtx_id), k, out.reads[k], false);
  }
  if (mutations_.apply_mtx_on_vote) {
    install(mtx_owner(mtx_id), fragment.writes);
    listener_->on_mtx_applied(mtx_id, Decision::kCommit, fragment.writes);
    applied_early_.insert(mtx_id);
  }
  return out;
}

bool PartitionEngine::mtx_decide(const std::string& mtx_id, Decision decision) {
  auto it = mtx_.find(mtx_id);
  if (it == mtx_.end() || !it->second.in_doubt()) return false;
  LogRecord d = record(LogKind::kMtxDecision);
  d.mtx_id = mtx_id;
  d.decision = decision;
  log_.append(d, true);

  MtxRecord& rec = it->second;
  rec.decision = decision;
  if (decision == Decision::kCommit && !applied_early_.count(mtx_id)) {
    install(mtx_owner(mtx_id), rec.fragment.writes);
    listener_->on_mtx_applied(mtx_id, decision, rec.fragment.writes);
    ++commits_since_checkpoint_;
    ++load_;
  } else if (decision == Decision::kAbort) {
    listener_->on_mtx_applied(mtx_id, decision, {});
  }
  rec.fragment = MtxFragment{};
  if (auto h = mtx_handles_.find(mtx_id); h != mtx_handles_.end()) {
    const LockHolder handle = h->second;
    mtx_handles_.erase(h);
    release(handle, mtx_owner(mtx_id));
  }
  return true;
}

bool PartitionEngine::vote_query(const std::string& mtx_id) {
  auto it = mtx_.find(mtx_id);
  if (it != mtx_.end()) return it->second.yes;
  LogRecord vote = record(LogKind::kMtxVote);
  vote.mtx_id = mtx_id;
  vote.vote_yes = false;
  log_.append(vote, true);
  mtx_[mtx_id] = MtxRecord{};
  listener_->on_mtx_vote(mtx_id, false, {});
  return false;
}

std::vector<std::string> PartitionEngine::in_doubt() const {
  std::vector<std::string> out;
  for (const auto& [id, rec] : mtx_) {
    if (rec.in_doubt()) out.push_back(id);
  }
  return out;
}

Lsn PartitionEngine::checkpoint() {
  LogRecord c = record(LogKind::kCheckpoint);
  c.image.store = committed_;
  c.image.mtx = mtx_;
  const Lsn lsn = log_.append(c, true);
  commits_since_checkpoint_ = 0;
  return lsn;
}

void PartitionEngine::append_handoff() { log_.append(record(LogKind::kHandoff), true); }

std::uint64_t PartitionEngine::take_load() { return std::exchange(load_, 0); }

}  // namespace estore
