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

#include "estore/master/master_node.h"

#include <algorithm>
#include <memory>

namespace estore {

MasterNode::MasterNode(Simulator& sim, NodeId self, const Cluster& cluster)
    : NodeBase(sim, self),
      cluster_(cluster),
      config_(cluster.config),
      rpc_timeout_(std::max<SimTime>(cluster.config.mtx_timeout, 1)) {}

void MasterNode::on_start() {
  note({{"ev", "config"}, {"t_high", config_.t_high}, {"t_low", config_.t_low},
        {"window", config_.stats_window}, {"min_otms", config_.min_otms},
        {"lease_duration", config_.lease_duration}, {"elasticity", config_.elasticity},
        {"partitions", cluster_.partitions.size()}});
  after(config_.detect_interval, [this] { poll(); });
  if (config_.elasticity) {
    const SimTime w = config_.stats_window;
    after(w - now() % w + rpc_timeout_, [this] { plan_tick(); });
  }
}

void MasterNode::on_message(const NodeId& from, const json& msg) {
  if (complete_call(msg)) return;
  const std::string& type = msg.at("type").get_ref<const std::string&>();
  if (type == "Ready") {
    reply(from, msg, {{"type", "ReadyAck"}});
    const Epoch epoch = msg.at("epoch").get<Epoch>();
    otms_[from] = OtmInfo{epoch, false};
    if (auto it = pending_spawns_.find(from); it != pending_spawns_.end()) {
      auto cb = std::move(it->second);
      pending_spawns_.erase(it);
      cb(from);
    }
    if (!bootstrapped_ && otms_.size() >= cluster_.initial_otms) bootstrap();
  } else if (type == "LoadReport") {
    auto& window = loads_[msg.at("window").get<std::uint64_t>()];
    for (const auto& [p, n] : msg.at("loads").items()) {
      window[static_cast<PartitionId>(std::stoul(p))] += n.get<std::uint64_t>();
    }
  } else if (type == "ResolveMtx") {
    resolve(msg.at("mtx").get<std::string>(),
            msg.at("participants").get<std::vector<PartitionId>>());
  }
}

// ---------------------------------------------------------------------------
// Detection and recovery.

void MasterNode::poll() {
  after(config_.detect_interval, [this] { poll(); });
  call(cluster_.metadata, {{"type", "GetMap"}}, rpc_timeout_, [this](const json* resp) {
    if (!resp) return;
    on_map(resp->at("map").get<PartitionMap>());
    call(cluster_.metadata, {{"type", "ExpiredLessees"}}, rpc_timeout_, [this](const json* r) {
      if (r) check_failures(r->at("lessees"));
      redrive();
    });
  });
}

void MasterNode::on_map(const PartitionMap& map) {
  // Keep whichever entry is newer; our own CAS replies may be ahead.
  if (map_.entries.size() != map.entries.size()) {
    map_ = map;
    return;
  }
  for (std::size_t i = 0; i < map.entries.size(); ++i) {
    if (map.entries[i].version >= map_.entries[i].version) map_.entries[i] = map.entries[i];
  }
}

void MasterNode::check_failures(const json& lessees) {
  for (const auto& l : lessees) {
    const auto otm = l.at("otm").get<NodeId>();
    const auto epoch = l.at("epoch").get<Epoch>();
    if (recovering_.count({otm, epoch})) continue;
    std::vector<PartitionId> parts;
    bool referenced = false;
    for (const auto& e : map_.entries) {
      if (e.owner != otm || e.owner_lease_epoch != epoch) continue;
      referenced = true;
      if (!busy_.count(e.id)) parts.push_back(e.id);
    }
    if (auto it = otms_.find(otm); it != otms_.end() && it->second.epoch == epoch) {
      otms_.erase(it);
    }
    if (!referenced) {
      release_if_unreferenced(otm, epoch);
      continue;
    }
    if (!parts.empty()) recover_failed(otm, epoch, std::move(parts));
  }
}

void MasterNode::release_if_unreferenced(const NodeId& otm, Epoch epoch) {
  for (const auto& e : map_.entries) {
    if (e.owner == otm && e.owner_lease_epoch == epoch) return;
  }
  send(cluster_.metadata, {{"type", "ReleaseLease"}, {"otm", otm}, {"epoch", epoch}});
}

void MasterNode::recover_failed(const NodeId& otm, Epoch epoch, std::vector<PartitionId> parts) {
  recovering_.insert({otm, epoch});
  for (PartitionId p : parts) busy_.insert(p);
  note({{"ev", "DETECT"}, {"otm", otm}, {"epoch", epoch}, {"partitions", parts}});
  note({{"ev", "RECOVER_START"}, {"otm", otm}, {"epoch", epoch}, {"partitions", parts}});

  struct State {
    std::size_t remaining = 0;
    bool all_ok = true;
    bool started = false;
    bool aborted = false;
  };
  auto st = std::make_shared<State>();
  st->remaining = parts.size();
  const SimTime started_at = now();

  after(config_.lease_duration, [this, st, otm, epoch, parts] {
    if (st->started) return;
    st->aborted = true;
    for (PartitionId p : parts) busy_.erase(p);
    recovering_.erase({otm, epoch});
    note({{"ev", "recover_abort"}, {"otm", otm}, {"epoch", epoch}});
  });

  spawn("recover", [this, st, otm, epoch, parts, started_at](NodeId replacement) {
    if (st->aborted) return;
    st->started = true;
    for (PartitionId p : parts) {
      assign(p, replacement, false,
             [this, st, otm, epoch, parts, p, replacement, started_at](AssignResult r) {
               busy_.erase(p);
               if (r != AssignResult::kOpened) st->all_ok = false;
               if (--st->remaining > 0) return;
               note({{"ev", "RECOVER_END"}, {"otm", otm}, {"epoch", epoch},
                     {"partitions", parts}, {"replacement", replacement},
                     {"ok", st->all_ok}, {"latency", now() - started_at}});
               recovering_.erase({otm, epoch});
               release_if_unreferenced(otm, epoch);
             });
    }
  });
}

// Partitions whose owner holds its assignment lease but that were never
// confirmed open (a lost reply, a timed out call) get Recover/Open again.
void MasterNode::redrive() {
  for (const auto& e : map_.entries) {
    if (busy_.count(e.id)) continue;
    if (!e.owner) {
      // Never assigned (a bootstrap CAS that failed).
      if (!bootstrapped_ || otms_.empty()) continue;
      const PartitionId p = e.id;
      busy_.insert(p);
      assign(p, otms_.begin()->first, false, [this, p](AssignResult) { busy_.erase(p); });
      continue;
    }
    if (auto o = opened_.find(e.id); o != opened_.end() && o->second == e.ownership_epoch) continue;
    auto info = otms_.find(*e.owner);
    if (info == otms_.end() || info->second.epoch != e.owner_lease_epoch) continue;
    const PartitionId p = e.id;
    busy_.insert(p);
    recover_open(p, *e.owner, e.ownership_epoch, false, 2, [this, p](bool) { busy_.erase(p); });
  }
}

void MasterNode::spawn(const std::string& reason, std::function<void(NodeId)> on_ready) {
  const NodeId id = cluster_.spawn_otm();
  note({{"ev", "SPAWN"}, {"otm", id}, {"reason", reason}});
  pending_spawns_[id] = std::move(on_ready);
}

void MasterNode::bootstrap() {
  bootstrapped_ = true;
  std::vector<NodeId> initial;
  for (const auto& [otm, info] : otms_) initial.push_back(otm);
  initial.resize(std::min<std::size_t>(initial.size(), cluster_.initial_otms));
  note({{"ev", "bootstrap"}, {"otms", initial}});
  call(cluster_.metadata, {{"type", "GetMap"}}, rpc_timeout_, [this, initial](const json* resp) {
    if (!resp) {
      bootstrapped_ = false;
      return;
    }
    on_map(resp->at("map").get<PartitionMap>());
    for (const auto& e : map_.entries) {
      if (e.owner || busy_.count(e.id)) continue;
      const PartitionId p = e.id;
      busy_.insert(p);
      assign(p, initial[p % initial.size()], false, [this, p](AssignResult) { busy_.erase(p); });
    }
  });
}

void MasterNode::assign(PartitionId p, const NodeId& dst, bool migration, AssignDone done) {
  const PartitionEntry* entry = map_.find(p);
  const std::uint64_t expected = entry ? entry->version : 0;
  call(cluster_.metadata,
       {{"type", "CasAssign"}, {"partition", p}, {"expected_version", expected}, {"owner", dst}},
       rpc_timeout_, [this, p, dst, migration, done = std::move(done)](const json* resp) {
         if (!resp) {
           // The outcome is unknown; the next poll sees the map and redrives.
           done(AssignResult::kIncomplete);
           return;
         }
         const auto entry = resp->at("entry").get<PartitionEntry>();
         if (entry.id < map_.entries.size() && entry.version >= map_.entries[entry.id].version) {
           map_.entries[entry.id] = entry;
         }
         if (resp->at("status") != "ok") {
           done(AssignResult::kCasFailed);
           return;
         }
         if (migration) {
           note({{"ev", "MIGRATE_PHASE3"}, {"p", p}, {"dst", dst},
                 {"epoch", entry.ownership_epoch}});
         }
         recover_open(p, dst, entry.ownership_epoch, migration, 3, [done](bool ok) {
           done(ok ? AssignResult::kOpened : AssignResult::kIncomplete);
         });
       });
}

void MasterNode::recover_open(PartitionId p, const NodeId& dst, Epoch epoch, bool migration,
                              int attempts, Done done) {
  call(dst, {{"type", "Recover"}, {"partition", p}, {"epoch", epoch}}, rpc_timeout_,
       [this, p, dst, epoch, migration, attempts, done = std::move(done)](const json* resp) {
         if (resp && resp->at("ok").get<bool>()) {
           if (migration) note({{"ev", "MIGRATE_PHASE4"}, {"p", p}, {"dst", dst}, {"epoch", epoch}});
           open(p, dst, epoch, migration, 3, done);
           return;
         }
         if (attempts > 1 && !resp) {
           recover_open(p, dst, epoch, migration, attempts - 1, done);
           return;
         }
         done(false);
       });
}

void MasterNode::open(PartitionId p, const NodeId& dst, Epoch epoch, bool migration, int attempts,
                      Done done) {
  call(dst, {{"type", "Open"}, {"partition", p}, {"epoch", epoch}}, rpc_timeout_,
       [this, p, dst, epoch, migration, attempts, done = std::move(done)](const json* resp) {
         if (resp && resp->at("ok").get<bool>()) {
           opened_[p] = epoch;
           done(true);
           return;
         }
         if (attempts > 1 && !resp) {
           open(p, dst, epoch, migration, attempts - 1, done);
           return;
         }
         done(false);
       });
}

// ---------------------------------------------------------------------------
// Migration.

void MasterNode::migrate(PartitionId p, const NodeId& src, const NodeId& dst, Done done) {
  const PartitionEntry* entry = map_.find(p);
  if (!entry || entry->owner != src) {
    note({{"ev", "migrate_abort"}, {"p", p}, {"reason", "owner changed"}});
    done(false);
    return;
  }
  note({{"ev", "MIGRATE_PHASE1"}, {"p", p}, {"src", src}, {"dst", dst},
        {"epoch", entry->ownership_epoch}});
  quiesce(p, src, dst, entry->ownership_epoch, 3, std::move(done));
}

void MasterNode::quiesce(PartitionId p, const NodeId& src, const NodeId& dst, Epoch epoch,
                         int attempts, Done done) {
  call(src, {{"type", "Quiesce"}, {"partition", p}, {"epoch", epoch}, {"hint", dst}},
       config_.drain_deadline + rpc_timeout_,
       [this, p, src, dst, epoch, attempts, done = std::move(done)](const json* resp) {
         if (!resp) {
           if (attempts > 1) {
             quiesce(p, src, dst, epoch, attempts - 1, done);
           } else {
             note({{"ev", "migrate_abort"}, {"p", p}, {"reason", "source unreachable"}});
             // The source may have handed off anyway; let redrive reopen it.
             opened_.erase(p);
             done(false);
           }
           return;
         }
         if (!resp->at("ok").get<bool>()) {
           note({{"ev", "migrate_abort"}, {"p", p}, {"reason", resp->value("reason", "")}});
           opened_.erase(p);
           done(false);
           return;
         }
         note({{"ev", "MIGRATE_PHASE2"}, {"p", p}, {"src", src}, {"dst", dst}});
         assign(p, dst, true, [this, p, src, dst, done](AssignResult r) {
           if (r == AssignResult::kOpened) {
             note({{"ev", "migrate_done"}, {"p", p}, {"src", src}, {"dst", dst}});
             done(true);
             return;
           }
           if (r == AssignResult::kIncomplete) {
             note({{"ev", "migrate_incomplete"}, {"p", p}, {"dst", dst}});
             done(false);
             return;
           }
           // The destination could not take it; hand it back to the source.
           note({{"ev", "migrate_fallback"}, {"p", p}, {"src", src}, {"dst", dst}});
           assign(p, src, false, [done](AssignResult) { done(false); });
         });
       });
}

void MasterNode::request_migration(PartitionId p, std::optional<NodeId> dst) {
  const PartitionEntry* entry = map_.find(p);
  if (!entry || !entry->owner || busy_.count(p)) {
    note({{"ev", "migrate_skipped"}, {"p", p}});
    return;
  }
  const NodeId src = *entry->owner;
  if (!dst) {
    for (const auto& [otm, info] : otms_) {
      if (otm != src && !info.retiring) {
        dst = otm;
        break;
      }
    }
  }
  busy_.insert(p);
  auto finish = [this, p](bool) { busy_.erase(p); };
  if (dst) {
    migrate(p, src, *dst, finish);
  } else {
    spawn("migrate", [this, p, src, finish](NodeId fresh) { migrate(p, src, fresh, finish); });
  }
}

// ---------------------------------------------------------------------------
// Elasticity.

void MasterNode::plan_tick() {
  const SimTime w = config_.stats_window;
  after(w, [this] { plan_tick(); });
  const std::uint64_t window = now() / w - 1;
  for (auto it = loads_.begin(); it != loads_.end() && it->first + 1 < window;) {
    it = loads_.erase(it);
  }
  if (!bootstrapped_ || !busy_.empty() || !recovering_.empty() || plan_active_ ||
      !pending_spawns_.empty()) {
    return;
  }

  LoadStats stats;
  for (const auto& [otm, info] : otms_) {
    if (info.retiring) continue;
    auto& owned = stats.owned[otm];
    for (const auto& e : map_.entries) {
      if (e.owner == otm && e.owner_lease_epoch == info.epoch) owned.push_back(e.id);
    }
  }
  if (auto it = loads_.find(window); it != loads_.end()) stats.per_partition = it->second;
  for (const auto& e : map_.entries) stats.per_partition.try_emplace(e.id, 0);

  MigrationPlan plan = plan_rebalance(stats, config_.t_high, config_.t_low, config_.min_otms);
  json per_otm = json::object();
  for (const auto& [otm, parts] : stats.owned) per_otm[otm.str()] = stats.otm_load(otm);
  json per_partition = json::object();
  for (const auto& [p, n] : stats.per_partition) per_partition[std::to_string(p)] = n;
  note({{"ev", "PLAN"}, {"window", window}, {"per_otm", per_otm},
        {"per_partition", per_partition}, {"plan", plan}});
  for (const auto& otm : plan.saturated) note({{"ev", "saturated"}, {"otm", otm}});
  if (!plan.empty()) run_plan(plan);
}

void MasterNode::run_plan(const MigrationPlan& plan) {
  plan_active_ = true;
  struct State {
    MigrationPlan plan;
    std::vector<std::optional<NodeId>> spawned;
    std::size_t waiting = 0;
    std::size_t moving = 0;
    bool failed = false;
    bool moves_started = false;
  };
  auto st = std::make_shared<State>();
  st->plan = plan;
  st->spawned.resize(plan.spawns);
  st->waiting = plan.spawns;

  auto finish = [this, st] {
    if (!st->failed) {
      for (const auto& otm : st->plan.retires) retire(otm);
    }
    plan_active_ = false;
  };
  auto start_moves = [this, st, finish] {
    st->moves_started = true;
    st->moving = st->plan.moves.size();
    if (st->moving == 0) {
      finish();
      return;
    }
    for (const Move& m : st->plan.moves) busy_.insert(m.partition);
    for (const Move& m : st->plan.moves) {
      const NodeId dst = m.dst ? *m.dst : *st->spawned[m.spawn_slot];
      const PartitionId p = m.partition;
      migrate(p, m.src, dst, [this, st, p, finish](bool ok) {
        busy_.erase(p);
        if (!ok) st->failed = true;
        if (--st->moving == 0) finish();
      });
    }
  };
  if (plan.spawns == 0) {
    start_moves();
    return;
  }
  for (std::uint32_t i = 0; i < plan.spawns; ++i) {
    spawn("load", [st, i, start_moves](NodeId fresh) {
      if (st->moves_started) return;
      st->spawned[i] = fresh;
      if (--st->waiting == 0) start_moves();
    });
  }
  after(config_.lease_duration, [this, st] {
    if (st->moves_started) return;
    // A spawn never came up; give up on this plan.
    st->moves_started = true;
    plan_active_ = false;
    note({{"ev", "plan_abort"}, {"reason", "spawn timeout"}});
  });
}

void MasterNode::retire(const NodeId& otm) {
  for (const auto& e : map_.entries) {
    if (e.owner == otm) {
      note({{"ev", "retire_rejected"}, {"otm", otm}, {"reason", "owns partitions"}});
      return;
    }
  }
  auto it = otms_.find(otm);
  if (it == otms_.end()) return;
  it->second.retiring = true;
  call(otm, {{"type", "Retire"}}, rpc_timeout_, [this, otm](const json* resp) {
    if (resp && resp->at("ok").get<bool>()) {
      note({{"ev", "RETIRE"}, {"otm", otm}});
      otms_.erase(otm);
      return;
    }
    note({{"ev", "retire_rejected"}, {"otm", otm},
          {"reason", resp ? resp->value("reason", "") : "timeout"}});
    if (auto i = otms_.find(otm); i != otms_.end()) i->second.retiring = false;
  });
}

// ---------------------------------------------------------------------------
// In-doubt minitransactions.

void MasterNode::resolve(const std::string& mtx, const std::vector<PartitionId>& participants) {
  if (auto d = ledger_.lookup(mtx)) {
    note({{"ev", "MTX_RESOLVE"}, {"mtx", mtx}, {"decision", decision_name(*d)}, {"cached", true}});
    broadcast(mtx, participants, *d);
    return;
  }
  if (resolving_.count(mtx)) return;
  resolving_[mtx] = Resolution{participants, {}};
  for (PartitionId p : participants) query_vote(mtx, p);
}

void MasterNode::query_vote(const std::string& mtx, PartitionId p) {
  const PartitionEntry* entry = map_.find(p);
  auto retry = [this, mtx, p] {
    after(rpc_timeout_, [this, mtx, p] {
      if (resolving_.count(mtx)) query_vote(mtx, p);
    });
  };
  if (!entry || !entry->owner) {
    retry();
    return;
  }
  call(*entry->owner, {{"type", "VoteQuery"}, {"mtx", mtx}, {"partition", p}}, rpc_timeout_,
       [this, mtx, p, retry](const json* resp) {
         auto it = resolving_.find(mtx);
         if (it == resolving_.end()) return;
         if (!resp || !resp->at("ok").get<bool>()) {
           retry();
           return;
         }
         it->second.votes[p] = resp->at("yes").get<bool>();
         if (it->second.votes.size() == it->second.participants.size()) decide_resolution(mtx);
       });
}

void MasterNode::decide_resolution(const std::string& mtx) {
  auto it = resolving_.find(mtx);
  Resolution res = std::move(it->second);
  resolving_.erase(it);
  bool all_yes = true;
  for (const auto& [p, yes] : res.votes) all_yes = all_yes && yes;
  const Decision d =
      ledger_.record(mtx, all_yes ? Decision::kCommit : Decision::kAbort, res.participants);
  note({{"ev", "MTX_RESOLVE"}, {"mtx", mtx}, {"decision", decision_name(d)},
        {"participants", res.participants}});
  note({{"ev", "mtx_decision"}, {"mtx", mtx}, {"decision", decision_name(d)}, {"by", "resolver"}});
  broadcast(mtx, res.participants, d);
}

void MasterNode::broadcast(const std::string& mtx, const std::vector<PartitionId>& participants,
                           Decision decision) {
  for (PartitionId p : participants) {
    const PartitionEntry* entry = map_.find(p);
    if (!entry || !entry->owner) continue;
    send(*entry->owner, {{"type", "MtxDecision"}, {"mtx", mtx}, {"partition", p},
                         {"decision", decision_name(decision)}});
  }
}

}  // namespace estore
