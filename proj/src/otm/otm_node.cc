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

#include "estore/otm/otm_node.h"

#include <algorithm>
#include <utility>

namespace estore {

namespace {

json opt_value(const std::optional<Value>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

class OtmNode::Listener : public EngineListener {
 public:
  Listener(OtmNode& node, PartitionId p, Epoch epoch) : node_(node), p_(p), epoch_(epoch) {}

  void on_read(const std::string& reader, const Key& key, const std::optional<Value>& value,
               bool own_write) override {
    node_.note({{"ev", "txn_read"}, {"p", p_}, {"txn", reader}, {"key", key},
                {"value", opt_value(value)}, {"own", own_write}});
  }
  void on_install(const std::string& writer, const Key& key, const Value& value) override {
    node_.note({{"ev", "txn_write"}, {"p", p_}, {"txn", writer}, {"key", key}, {"value", value}});
  }
  void on_commit(const TxnId& txn, Lsn lsn) override {
    json ev{{"ev", "txn_commit"}, {"p", p_}, {"txn", txn.str()}, {"lsn", lsn}, {"epoch", epoch_}};
    if (auto it = node_.txns_.find(txn); it != node_.txns_.end()) {
      ev["client"] = it->second.client;
      ev["tag"] = it->second.tag;
      node_.txns_.erase(it);
    }
    node_.note(std::move(ev));
  }
  void on_abort(const TxnId& txn, std::string_view reason) override {
    node_.note({{"ev", "txn_abort"}, {"p", p_}, {"txn", txn.str()}, {"reason", reason}});
    auto it = node_.txns_.find(txn);
    if (it == node_.txns_.end()) return;
    if (it->second.pending) {
      node_.reply(it->second.client, *it->second.pending,
                  {{"type", "Aborted"}, {"txn", txn.str()}, {"reason", reason}});
    }
    node_.txns_.erase(it);
  }
  void on_release(const std::string& owner, const std::vector<Key>& keys) override {
    if (keys.empty()) return;
    node_.note({{"ev", "locks_released"}, {"p", p_}, {"txn", owner}, {"keys", keys}});
  }
  void on_resume(const TxnId& txn, const std::optional<Value>& value) override {
    auto it = node_.txns_.find(txn);
    if (it == node_.txns_.end() || !it->second.pending) return;
    const json request = std::move(*it->second.pending);
    it->second.pending.reset();
    if (request.at("type") == "Read") {
      node_.reply(it->second.client, request,
                  {{"type", "ReadOk"}, {"txn", txn.str()}, {"value", opt_value(value)}});
    } else {
      node_.reply(it->second.client, request, {{"type", "WriteOk"}, {"txn", txn.str()}});
    }
  }
  void on_mtx_vote(const std::string& mtx_id, bool yes,
                   const std::map<Key, std::optional<Value>>& observed) override {
    json compares = json::object();
    for (const auto& [k, v] : observed) compares[k] = opt_value(v);
    node_.note({{"ev", "mtx_vote"}, {"p", p_}, {"mtx", mtx_id}, {"vote", yes ? "YES" : "NO"},
                {"observed", std::move(compares)}});
  }
  void on_mtx_applied(const std::string& mtx_id, Decision decision,
                      const std::map<Key, Value>& writes) override {
    node_.note({{"ev", "mtx_apply"}, {"p", p_}, {"mtx", mtx_id},
                {"decision", decision_name(decision)}, {"writes", writes}});
  }

 private:
  OtmNode& node_;
  PartitionId p_;
  Epoch epoch_;
};

OtmNode::OtmNode(Simulator& sim, NodeId self, const Cluster& cluster)
    : NodeBase(sim, self), cluster_(cluster), config_(cluster.config) {
  if (auto it = config_.otm_clock_lag.find(self.index); it != config_.otm_clock_lag.end()) {
    clock_lag_ = it->second;
  }
}

OtmNode::~OtmNode() = default;

std::optional<Epoch> OtmNode::lease_epoch() const {
  if (!lease_) return std::nullopt;
  return lease_->epoch;
}

const PartitionEngine* OtmNode::engine(PartitionId p) const {
  auto it = slots_.find(p);
  return it == slots_.end() ? nullptr : it->second->engine.get();
}

bool OtmNode::serving(PartitionId p) const {
  auto it = slots_.find(p);
  return it != slots_.end() && it->second->open;
}

SimTime OtmNode::local_now() const { return now() > clock_lag_ ? now() - clock_lag_ : 0; }

bool OtmNode::lease_ok() const {
  if (!lease_) return false;
  const SimTime margin = config_.mutations.disable_safety_margin ? 0 : config_.safety_margin;
  return local_now() + margin < lease_->expires_at;
}

void OtmNode::on_start() {
  acquire_lease();
  after(config_.checkpoint_interval, [this] { checkpoint_tick(); });
  after(std::max<SimTime>(config_.txn_idle_timeout / 2, 1), [this] { idle_tick(); });
  const SimTime w = config_.stats_window;
  after(w - now() % w, [this] { report_tick(); });
}

void OtmNode::acquire_lease() {
  const std::uint64_t gen = lease_generation_;
  call(cluster_.metadata, {{"type", "AcquireLease"}}, config_.mtx_timeout,
       [this, gen](const json* resp) {
         if (gen != lease_generation_ || retiring_) return;
         if (resp && resp->at("ok").get<bool>()) {
           lease_ = resp->at("lease").get<Lease>();
           ++lease_generation_;
           note({{"ev", "otm_ready"}, {"epoch", lease_->epoch}});
           arm_lease_timers();
           send_ready(lease_generation_);
           return;
         }
         // A previous incarnation's lease may still be live; wait it out.
         after(std::max<SimTime>(config_.lease_duration / 20, 1), [this, gen] {
           if (gen == lease_generation_) acquire_lease();
         });
       });
}

void OtmNode::send_ready(std::uint64_t generation) {
  if (generation != lease_generation_ || !lease_) return;
  call(cluster_.master, {{"type", "Ready"}, {"epoch", lease_->epoch}}, config_.mtx_timeout,
       [this, generation](const json* resp) {
         if (!resp) send_ready(generation);
       });
}

void OtmNode::arm_lease_timers() {
  const std::uint64_t gen = lease_generation_;
  after(config_.lease_duration / 2, [this, gen] {
    if (gen == lease_generation_) renew();
  });
  fence_check(gen);
}

void OtmNode::fence_check(std::uint64_t generation) {
  if (generation != lease_generation_ || !lease_) return;
  if (!lease_ok()) {
    self_fence("lease_expiring");
    return;
  }
  const SimTime margin = config_.mutations.disable_safety_margin ? 0 : config_.safety_margin;
  const SimTime stop_at = lease_->expires_at - margin;
  after(stop_at - local_now(), [this, generation] { fence_check(generation); });
}

void OtmNode::renew() {
  if (!lease_) return;
  const std::uint64_t gen = lease_generation_;
  call(cluster_.metadata, {{"type", "RenewLease"}, {"epoch", lease_->epoch}}, config_.mtx_timeout,
       [this, gen](const json* resp) {
         if (gen != lease_generation_ || !lease_) return;
         if (!resp) {
           after(config_.mtx_timeout, [this, gen] {
             if (gen == lease_generation_) renew();
           });
           return;
         }
         if (!resp->at("ok").get<bool>()) {
           self_fence("renew_rejected");
           return;
         }
         lease_->expires_at = resp->at("lease").at("expires_at").get<SimTime>();
         after(config_.lease_duration / 2, [this, gen] {
           if (gen == lease_generation_) renew();
         });
       });
}

void OtmNode::self_fence(const std::string& reason) {
  note({{"ev", "self_fence"}, {"reason", reason},
        {"epoch", lease_ ? json(lease_->epoch) : json(nullptr)}});
  std::vector<PartitionId> held;
  for (const auto& [p, slot] : slots_) held.push_back(p);
  for (PartitionId p : held) drop_partition(p, reason);
  lease_.reset();
  ++lease_generation_;
  if (!retiring_) acquire_lease();
}

void OtmNode::drop_partition(PartitionId p, const std::string& reason) {
  auto it = slots_.find(p);
  if (it == slots_.end()) return;
  std::unique_ptr<Slot> slot = std::move(it->second);
  slots_.erase(it);
  slot->engine->abort_all(reason);
  load_[p] += slot->engine->take_load();
  for (const auto& [mtx, timer] : slot->resolve_timers) cancel(timer);
  for (const auto& [from, msg] : slot->quiesce_waiters) {
    reply(from, msg, {{"type", "QuiesceDone"}, {"ok", false}, {"reason", reason}});
  }
  sim_.detach_volume(Cluster::volume_for(p), self_);
  note({{"ev", "close"}, {"p", p}, {"epoch", slot->epoch}, {"reason", reason}});
}

void OtmNode::reject(const NodeId& from, const json& msg, const std::string& reason,
                     const std::optional<NodeId>& hint) {
  json r{{"type", "Rejected"}, {"partition", msg.value("partition", json(nullptr))},
         {"reason", reason}};
  if (hint) r["hint"] = *hint;
  if (msg.contains("mtx")) r["mtx"] = msg["mtx"];
  reply(from, msg, std::move(r));
}

OtmNode::Slot* OtmNode::admit(const NodeId& from, const json& msg, bool new_work) {
  const auto p = msg.at("partition").get<PartitionId>();
  const auto epoch = msg.at("epoch").get<Epoch>();
  if (!lease_ok()) {
    reject(from, msg, "lease", std::nullopt);
    return nullptr;
  }
  auto it = slots_.find(p);
  if (it == slots_.end()) {
    std::optional<NodeId> hint;
    if (auto h = handed_off_.find(p); h != handed_off_.end()) hint = h->second.second;
    reject(from, msg, "not_owner", hint);
    return nullptr;
  }
  Slot& slot = *it->second;
  if (!slot.open) {
    reject(from, msg, "not_open", std::nullopt);
    return nullptr;
  }
  if (epoch != slot.epoch) {
    reject(from, msg, "stale_epoch", self_);
    return nullptr;
  }
  if (new_work && slot.draining) {
    reject(from, msg, "migrating", slot.hint);
    return nullptr;
  }
  note({{"ev", "admit"}, {"p", p}, {"epoch", epoch}});
  return &slot;
}

void OtmNode::on_message(const NodeId& from, const json& msg) {
  if (complete_call(msg)) return;
  const std::string& type = msg.at("type").get_ref<const std::string&>();
  if (type == "Begin" || type == "Read" || type == "Write" || type == "Commit" ||
      type == "Abort") {
    handle_txn(from, msg);
  } else if (type == "SingleRead") {
    handle_single_read(from, msg);
  } else if (type == "MtxRound") {
    handle_mtx_round(from, msg);
  } else if (type == "MtxDecision") {
    handle_decision(msg);
  } else if (type == "Recover") {
    handle_recover(from, msg);
  } else if (type == "Open") {
    handle_open(from, msg);
  } else if (type == "Quiesce") {
    handle_quiesce(from, msg);
  } else if (type == "VoteQuery") {
    handle_vote_query(from, msg);
  } else if (type == "Retire") {
    handle_retire(from, msg);
  }
}

void OtmNode::handle_recover(const NodeId& from, const json& msg) {
  const auto p = msg.at("partition").get<PartitionId>();
  const auto epoch = msg.at("epoch").get<Epoch>();
  auto answer = [&](bool ok, const std::string& reason, json in_doubt) {
    reply(from, msg, {{"type", "Recovered"}, {"partition", p}, {"epoch", epoch}, {"ok", ok},
                      {"reason", reason}, {"in_doubt", std::move(in_doubt)}});
  };
  if (!lease_ok()) return answer(false, "lease", json::array());
  if (auto it = slots_.find(p); it != slots_.end()) {
    if (it->second->epoch == epoch) return answer(true, "", it->second->engine->in_doubt());
    drop_partition(p, "superseded");
  }
  const std::string volume = Cluster::volume_for(p);
  if (!sim_.attach_volume(volume, self_, epoch)) return answer(false, "attach", json::array());
  handed_off_.erase(p);

  RecoveredState state = recover_partition(sim_.volume_records(volume));
  auto slot = std::make_unique<Slot>();
  slot->id = p;
  slot->epoch = epoch;
  slot->log = std::make_unique<VolumeLog>(sim_, self_, volume);
  slot->listener = std::make_unique<Listener>(*this, p, epoch);
  slot->engine = std::make_unique<PartitionEngine>(p, cluster_.partitions.at(p), epoch, *slot->log,
                                                   config_.mutations, slot->listener.get());
  slot->engine->load(state);
  const auto in_doubt = slot->engine->in_doubt();
  note({{"ev", "recover_done"}, {"p", p}, {"epoch", epoch}, {"store", state.store},
        {"redo", state.redo_count}, {"scanned", state.records_scanned},
        {"torn_tail", state.torn_tail},
        {"checkpoint", state.checkpoint_lsn ? json(*state.checkpoint_lsn) : json(nullptr)},
        {"in_doubt", in_doubt}});
  Slot& ref = *slot;
  slots_[p] = std::move(slot);
  for (const auto& mtx : in_doubt) watch_in_doubt(ref, mtx, config_.mtx_timeout);
  answer(true, "", in_doubt);
}

void OtmNode::handle_open(const NodeId& from, const json& msg) {
  const auto p = msg.at("partition").get<PartitionId>();
  const auto epoch = msg.at("epoch").get<Epoch>();
  auto it = slots_.find(p);
  const bool ok = it != slots_.end() && it->second->epoch == epoch && lease_ok();
  if (ok && !it->second->open) {
    it->second->open = true;
    note({{"ev", "open"}, {"p", p}, {"epoch", epoch}});
  }
  reply(from, msg, {{"type", "Opened"}, {"partition", p}, {"epoch", epoch}, {"ok", ok}});
}

void OtmNode::handle_quiesce(const NodeId& from, const json& msg) {
  const auto p = msg.at("partition").get<PartitionId>();
  const auto epoch = msg.at("epoch").get<Epoch>();
  if (auto h = handed_off_.find(p); h != handed_off_.end() && h->second.first == epoch) {
    reply(from, msg, {{"type", "QuiesceDone"}, {"partition", p}, {"ok", true}});
    return;
  }
  auto it = slots_.find(p);
  if (it == slots_.end() || it->second->epoch != epoch || !lease_ok()) {
    reply(from, msg, {{"type", "QuiesceDone"}, {"partition", p}, {"ok", false},
                      {"reason", "not_owner"}});
    return;
  }
  Slot& slot = *it->second;
  slot.quiesce_waiters.emplace_back(from, msg);
  if (slot.draining) return;
  slot.draining = true;
  if (msg.contains("hint")) slot.hint = msg.at("hint").get<NodeId>();
  note({{"ev", "quiesce_start"}, {"p", p}, {"epoch", epoch},
        {"active", slot.engine->active_count()}});
  finish_quiesce(p, now() + config_.drain_deadline);
}

void OtmNode::finish_quiesce(PartitionId p, SimTime deadline) {
  auto it = slots_.find(p);
  if (it == slots_.end() || !it->second->draining) return;
  Slot& slot = *it->second;
  if (slot.engine->active_count() > 0 && now() < deadline) {
    after(std::min<SimTime>(10, deadline - now()), [this, p, deadline] {
      finish_quiesce(p, deadline);
    });
    return;
  }
  slot.engine->abort_all("migration");
  try {
    slot.engine->checkpoint();
    slot.engine->append_handoff();
  } catch (const FencingError&) {
    note({{"ev", "append_rejected"}, {"p", p}, {"epoch", slot.epoch}});
    drop_partition(p, "fenced");
    return;
  }
  const Epoch epoch = slot.epoch;
  auto waiters = std::move(slot.quiesce_waiters);
  slot.quiesce_waiters.clear();
  handed_off_[p] = {epoch, slot.hint};
  drop_partition(p, "handoff");
  for (const auto& [from, msg] : waiters) {
    reply(from, msg, {{"type", "QuiesceDone"}, {"partition", p}, {"ok", true}});
  }
}

void OtmNode::handle_vote_query(const NodeId& from, const json& msg) {
  const auto p = msg.at("partition").get<PartitionId>();
  const std::string mtx = msg.at("mtx").get<std::string>();
  auto it = slots_.find(p);
  if (it == slots_.end() || !lease_ok()) {
    reply(from, msg, {{"type", "VoteQueryResp"}, {"mtx", mtx}, {"partition", p}, {"ok", false}});
    return;
  }
  bool yes = false;
  try {
    yes = it->second->engine->vote_query(mtx);
  } catch (const FencingError&) {
    note({{"ev", "append_rejected"}, {"p", p}, {"epoch", it->second->epoch}});
    drop_partition(p, "fenced");
    reply(from, msg, {{"type", "VoteQueryResp"}, {"mtx", mtx}, {"partition", p}, {"ok", false}});
    return;
  }
  reply(from, msg, {{"type", "VoteQueryResp"}, {"mtx", mtx}, {"partition", p}, {"ok", true},
                    {"yes", yes}});
}

void OtmNode::handle_retire(const NodeId& from, const json& msg) {
  if (!slots_.empty()) {
    reply(from, msg, {{"type", "RetireResp"}, {"ok", false}, {"reason", "owns partitions"}});
    return;
  }
  retiring_ = true;
  if (lease_) {
    send(cluster_.metadata,
         {{"type", "ReleaseLease"}, {"otm", self_}, {"epoch", lease_->epoch}});
  }
  reply(from, msg, {{"type", "RetireResp"}, {"ok", true}});
  note({{"ev", "retired"}});
  sim_.halt_node(self_);
}

void OtmNode::handle_decision(const json& msg) {
  const auto p = msg.at("partition").get<PartitionId>();
  const std::string mtx = msg.at("mtx").get<std::string>();
  const Decision decision = parse_decision(msg.at("decision").get<std::string>());
  auto it = slots_.find(p);
  if (it == slots_.end()) return;
  Slot& slot = *it->second;
  bool applied = false;
  try {
    applied = slot.engine->mtx_decide(mtx, decision);
  } catch (const FencingError&) {
    note({{"ev", "append_rejected"}, {"p", p}, {"epoch", slot.epoch}});
    drop_partition(p, "fenced");
    return;
  }
  if (!applied) return;
  if (auto t = slot.resolve_timers.find(mtx); t != slot.resolve_timers.end()) {
    cancel(t->second);
    slot.resolve_timers.erase(t);
  }
  maybe_checkpoint(slot, false);
}

void OtmNode::handle_txn(const NodeId& from, const json& msg) {
  const std::string& type = msg.at("type").get_ref<const std::string&>();
  Slot* slot = admit(from, msg, type == "Begin");
  if (!slot) return;
  PartitionEngine& engine = *slot->engine;
  const PartitionId p = slot->id;

  if (type == "Begin") {
    const TxnId txn{lease_->epoch, next_txn_++};
    engine.begin(txn, now());
    txns_[txn] = TxnInfo{from, p, msg.value("tag", json(nullptr)), std::nullopt};
    note({{"ev", "txn_begin"}, {"p", p}, {"txn", txn.str()}, {"client", from},
          {"tag", msg.value("tag", json(nullptr))}});
    reply(from, msg, {{"type", "BeginOk"}, {"txn", txn.str()}});
    return;
  }

  const TxnId txn = TxnId::parse(msg.at("txn").get<std::string>());
  if (!engine.has_txn(txn)) {
    reply(from, msg, {{"type", "Aborted"}, {"txn", txn.str()}, {"reason", "unknown txn"}});
    return;
  }
  using Status = PartitionEngine::OpResult::Status;
  auto answer_op = [&](const PartitionEngine::OpResult& r, json ok) {
    switch (r.status) {
      case Status::kOk:
        reply(from, msg, std::move(ok));
        break;
      case Status::kWait:
        txns_[txn].pending = msg;
        break;
      case Status::kAborted:
        reply(from, msg, {{"type", "Aborted"}, {"txn", txn.str()}, {"reason", r.reason}});
        break;
      case Status::kError:
        reply(from, msg, {{"type", "Error"}, {"txn", txn.str()}, {"reason", r.reason}});
        break;
    }
  };

  if (type == "Read") {
    auto r = engine.read(txn, msg.at("key").get<Key>(), now());
    answer_op(r, {{"type", "ReadOk"}, {"txn", txn.str()}, {"value", opt_value(r.value)}});
  } else if (type == "Write") {
    auto r = engine.write(txn, msg.at("key").get<Key>(), msg.at("value").get<Value>(), now());
    answer_op(r, {{"type", "WriteOk"}, {"txn", txn.str()}});
  } else if (type == "Commit") {
    PartitionEngine::CommitResult r;
    try {
      r = engine.commit(txn, now());
    } catch (const FencingError&) {
      note({{"ev", "append_rejected"}, {"p", p}, {"epoch", slot->epoch}});
      reply(from, msg, {{"type", "Aborted"}, {"txn", txn.str()}, {"reason", "fenced"}});
      drop_partition(p, "fenced");
      return;
    }
    if (r.status != PartitionEngine::CommitResult::Status::kCommitted) {
      reply(from, msg, {{"type", "Error"}, {"txn", txn.str()}, {"reason", r.reason}});
      return;
    }
    reply(from, msg, {{"type", "CommitOk"}, {"txn", txn.str()}, {"lsn", r.lsn}});
    maybe_checkpoint(*slot, false);
  } else if (type == "Abort") {
    engine.abort(txn, "client");
    reply(from, msg, {{"type", "AbortOk"}, {"txn", txn.str()}});
  }
}

void OtmNode::handle_single_read(const NodeId& from, const json& msg) {
  Slot* slot = admit(from, msg, false);
  if (!slot) return;
  json values = json::object();
  for (const auto& k : msg.at("keys")) {
    const Key key = k.get<Key>();
    if (!slot->engine->range().contains(key)) {
      reply(from, msg, {{"type", "Error"}, {"reason", "key outside partition"}});
      return;
    }
    values[key] = opt_value(slot->engine->read_committed(key));
    note({{"ev", "ro_read"}, {"p", slot->id}, {"key", key}, {"value", values[key]}});
  }
  reply(from, msg, {{"type", "SingleReadOk"}, {"partition", slot->id}, {"values", values}});
}

void OtmNode::handle_mtx_round(const NodeId& from, const json& msg) {
  const std::string mtx = msg.at("mtx").get<std::string>();
  Slot* slot = admit(from, msg, true);
  if (!slot) return;
  const PartitionId p = slot->id;
  const auto fragment = msg.at("fragment").get<MtxFragment>();
  const auto participants = msg.at("participants").get<std::vector<PartitionId>>();
  PartitionEngine::VoteResult v;
  try {
    v = slot->engine->mtx_vote(mtx, fragment, participants);
  } catch (const FencingError&) {
    note({{"ev", "append_rejected"}, {"p", p}, {"epoch", slot->epoch}});
    drop_partition(p, "fenced");
    reply(from, msg, {{"type", "Vote"}, {"mtx", mtx}, {"partition", p}, {"yes", false},
                      {"reason", "fenced"}});
    return;
  }
  json reads = json::object();
  for (const auto& [k, val] : v.reads) reads[k] = opt_value(val);
  reply(from, msg, {{"type", "Vote"}, {"mtx", mtx}, {"partition", p}, {"yes", v.yes},
                    {"reads", std::move(reads)}, {"reason", v.reason}});
  if (v.yes && slot->engine->mtx_records().at(mtx).in_doubt()) {
    watch_in_doubt(*slot, mtx, config_.mtx_timeout);
  }
}

void OtmNode::watch_in_doubt(Slot& slot, const std::string& mtx_id, SimTime delay) {
  const PartitionId p = slot.id;
  const Epoch epoch = slot.epoch;
  if (auto t = slot.resolve_timers.find(mtx_id); t != slot.resolve_timers.end()) {
    cancel(t->second);
  }
  slot.resolve_timers[mtx_id] = after(delay, [this, p, epoch, mtx_id, delay] {
    auto it = slots_.find(p);
    if (it == slots_.end() || it->second->epoch != epoch) return;
    Slot& s = *it->second;
    s.resolve_timers.erase(mtx_id);
    const auto& records = s.engine->mtx_records();
    auto rec = records.find(mtx_id);
    if (rec == records.end() || !rec->second.in_doubt()) return;
    note({{"ev", "mtx_in_doubt"}, {"p", p}, {"mtx", mtx_id}});
    send(cluster_.master, {{"type", "ResolveMtx"}, {"mtx", mtx_id}, {"partition", p},
                           {"participants", rec->second.participants}});
    watch_in_doubt(s, mtx_id, std::min<SimTime>(delay * 2, 8 * config_.mtx_timeout));
  });
}

bool OtmNode::maybe_checkpoint(Slot& slot, bool force) {
  if (!force && slot.engine->commits_since_checkpoint() < config_.checkpoint_commits) return true;
  try {
    const Lsn lsn = slot.engine->checkpoint();
    note({{"ev", "checkpoint"}, {"p", slot.id}, {"lsn", lsn}});
  } catch (const FencingError&) {
    note({{"ev", "append_rejected"}, {"p", slot.id}, {"epoch", slot.epoch}});
    drop_partition(slot.id, "fenced");
    return false;
  }
  return true;
}

void OtmNode::checkpoint_tick() {
  std::vector<PartitionId> held;
  for (const auto& [p, slot] : slots_) {
    if (slot->engine->commits_since_checkpoint() > 0) held.push_back(p);
  }
  for (PartitionId p : held) {
    if (auto it = slots_.find(p); it != slots_.end()) maybe_checkpoint(*it->second, true);
  }
  after(config_.checkpoint_interval, [this] { checkpoint_tick(); });
}

void OtmNode::idle_tick() {
  for (auto& [p, slot] : slots_) {
    for (const TxnId& txn : slot->engine->idle_txns(now(), config_.txn_idle_timeout)) {
      slot->engine->abort(txn, "idle");
    }
  }
  after(std::max<SimTime>(config_.txn_idle_timeout / 2, 1), [this] { idle_tick(); });
}

void OtmNode::report_tick() {
  const SimTime w = config_.stats_window;
  for (auto& [p, slot] : slots_) load_[p] += slot->engine->take_load();
  if (lease_) {
    json loads = json::object();
    for (const auto& [p, n] : load_) loads[std::to_string(p)] = n;
    send(cluster_.master, {{"type", "LoadReport"}, {"window", now() / w - 1},
                           {"epoch", lease_->epoch}, {"loads", std::move(loads)}});
  }
  load_.clear();
  after(w, [this] { report_tick(); });
}

}  // namespace estore
