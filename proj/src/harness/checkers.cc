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

#include "estore/harness/checkers.h"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "estore/kernel/simulator.h"

namespace estore {

json Violation::to_json() const {
  return json{{"checker", checker}, {"seqs", seqs}, {"explanation", explanation}};
}

std::string Violation::str() const {
  std::ostringstream out;
  out << checker << ": " << explanation << " [seq";
  for (auto s : seqs) out << ' ' << s;
  out << ']';
  return out.str();
}

namespace {

bool is_otm_local(const TraceEvent& e) {
  return e.kind == EventKind::kLocal && e.node.role == Role::kOtm;
}

bool at_partition(const TraceEvent& e, PartitionId p) {
  const json& j = e.payload;
  return j.contains("p") && j["p"].is_number() && j["p"].get<PartitionId>() == p;
}

std::string show(const json& v) { return v.is_null() ? "<absent>" : v.dump(); }

// Latest committed value per key, with the seq that put it there.
struct Cell {
  json value;
  std::uint64_t seq = 0;
};
using Model = std::map<Key, Cell>;

json lookup(const Model& m, const Key& k) {
  auto it = m.find(k);
  return it == m.end() ? json(nullptr) : it->second.value;
}

// Compares a store image against the model; returns explanations per key.
std::vector<std::pair<std::string, std::optional<std::uint64_t>>> diff_store(
    const Model& model, const json& store) {
  std::vector<std::pair<std::string, std::optional<std::uint64_t>>> out;
  for (const auto& [k, cell] : model) {
    if (!store.contains(k)) {
      out.emplace_back("committed write of " + k + "=" + show(cell.value) + " lost", cell.seq);
    } else if (store[k] != cell.value) {
      out.emplace_back(k + " holds " + show(store[k]) + " but the last committed write was " +
                           show(cell.value),
                       cell.seq);
    }
  }
  for (const auto& [k, v] : store.items()) {
    if (!model.count(k)) out.emplace_back(k + "=" + show(v) + " was never committed", std::nullopt);
  }
  return out;
}

void resync(Model& model, const json& store, std::uint64_t seq) {
  model.clear();
  for (const auto& [k, v] : store.items()) model[k] = Cell{v, seq};
}

std::set<PartitionId> partitions_in(const Trace& trace) {
  std::set<PartitionId> out;
  for (const auto& e : trace.events()) {
    if (is_otm_local(e) && e.payload.contains("p") && e.payload["p"].is_number()) {
      out.insert(e.payload["p"].get<PartitionId>());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serializability.

struct TxnHistory {
  std::vector<std::tuple<Key, json, std::uint64_t>> reads;
  std::map<Key, std::pair<Value, std::uint64_t>> writes;
};

// True if some serial order of 'txns' reproduces every read and the final
// store.
bool serial_order_exists(const std::map<std::string, TxnHistory>& txns,
                         const std::map<Key, json>& final_store) {
  std::vector<const TxnHistory*> order;
  for (const auto& [id, h] : txns) order.push_back(&h);
  std::vector<std::size_t> idx(order.size());
  std::iota(idx.begin(), idx.end(), 0);
  do {
    std::map<Key, json> state;
    bool ok = true;
    for (std::size_t i : idx) {
      for (const auto& [k, v, seq] : order[i]->reads) {
        auto it = state.find(k);
        const json have = it == state.end() ? json(nullptr) : it->second;
        if (have != v) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
      for (const auto& [k, w] : order[i]->writes) state[k] = w.first;
    }
    if (ok && state == final_store) return true;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return false;
}

}  // namespace

std::vector<Violation> check_serializability(const Trace& trace, PartitionId p) {
  std::vector<Violation> out;
  std::set<std::string> committed;
  for (const auto& e : trace.events()) {
    if (!is_otm_local(e) || !at_partition(e, p)) continue;
    const auto ev = e.ev();
    if (ev == "txn_commit") committed.insert(e.payload["txn"].get<std::string>());
    if (ev == "mtx_apply" && e.payload["decision"] == "COMMIT") {
      committed.insert("m:" + e.payload["mtx"].get<std::string>());
    }
  }

  struct KeyState {
    std::optional<std::string> writer;
    std::uint64_t write_seq = 0;
    std::vector<std::pair<std::string, std::uint64_t>> readers;
  };
  std::map<Key, KeyState> keys;
  // First witness (from seq, to seq) per edge.
  std::map<std::string, std::map<std::string, std::pair<std::uint64_t, std::uint64_t>>> edges;
  auto add_edge = [&](const std::string& a, const std::string& b, std::uint64_t s1,
                      std::uint64_t s2) {
    if (a == b) return;
    edges[a].emplace(b, std::make_pair(s1, s2));
  };
  std::map<std::string, TxnHistory> history;
  std::map<Key, json> final_store;
  std::set<std::string> finished;

  for (const auto& e : trace.events()) {
    if (!is_otm_local(e) || !at_partition(e, p)) continue;
    const auto ev = e.ev();
    const json& j = e.payload;
    if (ev == "txn_commit" || ev == "txn_abort") {
      finished.insert(j["txn"].get<std::string>());
    } else if (ev == "locks_released") {
      const auto owner = j["txn"].get<std::string>();
      if (owner.rfind("m:", 0) != 0 && !finished.count(owner)) {
        out.push_back({"serializability", {e.seq},
                       "partition " + std::to_string(p) + ": " + owner +
                           " released locks before committing or aborting"});
      }
    } else if (ev == "txn_read") {
      const auto t = j["txn"].get<std::string>();
      if (!committed.count(t) || j.value("own", false)) continue;
      const Key k = j["key"].get<Key>();
      KeyState& ks = keys[k];
      if (ks.writer) add_edge(*ks.writer, t, ks.write_seq, e.seq);
      ks.readers.emplace_back(t, e.seq);
      history[t].reads.emplace_back(k, j["value"], e.seq);
    } else if (ev == "txn_write") {
      const auto t = j["txn"].get<std::string>();
      if (!committed.count(t)) continue;
      const Key k = j["key"].get<Key>();
      KeyState& ks = keys[k];
      if (ks.writer) add_edge(*ks.writer, t, ks.write_seq, e.seq);
      for (const auto& [r, rseq] : ks.readers) add_edge(r, t, rseq, e.seq);
      ks.readers.clear();
      ks.writer = t;
      ks.write_seq = e.seq;
      history[t].writes[k] = {j["value"].get<Value>(), e.seq};
      final_store[k] = j["value"];
    }
  }

  // Cycle search (iterative colouring DFS over a small graph).
  std::map<std::string, int> colour;
  std::vector<std::string> stack;
  std::vector<std::string> cycle;
  std::function<bool(const std::string&)> dfs = [&](const std::string& u) {
    colour[u] = 1;
    stack.push_back(u);
    if (auto it = edges.find(u); it != edges.end()) {
      for (const auto& [v, w] : it->second) {
        if (colour[v] == 1) {
          auto start = std::find(stack.begin(), stack.end(), v);
          cycle.assign(start, stack.end());
          return true;
        }
        if (colour[v] == 0 && dfs(v)) return true;
      }
    }
    stack.pop_back();
    colour[u] = 2;
    return false;
  };
  for (const auto& [u, adj] : edges) {
    if (colour[u] == 0 && dfs(u)) break;
  }
  if (!cycle.empty()) {
    Violation v{"serializability", {}, "partition " + std::to_string(p) + ": conflict cycle "};
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      const std::string& a = cycle[i];
      const std::string& b = cycle[(i + 1) % cycle.size()];
      const auto [s1, s2] = edges[a][b];
      v.seqs.push_back(s1);
      v.seqs.push_back(s2);
      v.explanation += a + " -> ";
    }
    v.explanation += cycle.front();
    out.push_back(std::move(v));
  } else if (history.size() >= 2 && history.size() <= 5 &&
             !serial_order_exists(history, final_store)) {
    Violation v{"serializability", {},
                "partition " + std::to_string(p) +
                    ": no serial order of the committed transactions reproduces the history"};
    for (const auto& [t, h] : history) {
      for (const auto& [k, val, seq] : h.reads) v.seqs.push_back(seq);
      for (const auto& [k, w] : h.writes) v.seqs.push_back(w.second);
    }
    std::sort(v.seqs.begin(), v.seqs.end());
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Violation> check_serializability(const Trace& trace) {
  std::vector<Violation> out;
  for (PartitionId p : partitions_in(trace)) {
    auto v = check_serializability(trace, p);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Durability.

std::vector<Violation> check_durability(const Trace& trace) {
  std::vector<Violation> out;
  std::map<PartitionId, Model> models;
  for (const auto& e : trace.events()) {
    if (!is_otm_local(e) || !e.payload.contains("p")) continue;
    const auto ev = e.ev();
    const json& j = e.payload;
    const auto p = j["p"].get<PartitionId>();
    Model& model = models[p];
    if (ev == "txn_write") {
      model[j["key"].get<Key>()] = Cell{j["value"], e.seq};
    } else if ((ev == "txn_read" && !j.value("own", false)) || ev == "ro_read") {
      const Key k = j["key"].get<Key>();
      const json expected = lookup(model, k);
      if (j["value"] != expected) {
        Violation v{"durability", {e.seq},
                    e.node.str() + " read " + k + "=" + show(j["value"]) + " at partition " +
                        std::to_string(p) + " but the last committed value is " +
                        show(expected)};
        if (auto it = model.find(k); it != model.end()) v.seqs.insert(v.seqs.begin(), it->second.seq);
        out.push_back(std::move(v));
      }
    } else if (ev == "recover_done" || ev == "final_state") {
      const json& store = j["store"];
      for (const auto& [what, seq] : diff_store(model, store)) {
        Violation v{"durability", {}, "partition " + std::to_string(p) + " " + std::string(ev) +
                                          " on " + e.node.str() + ": " + what};
        if (seq) v.seqs.push_back(*seq);
        v.seqs.push_back(e.seq);
        out.push_back(std::move(v));
      }
      resync(model, store, e.seq);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Single ownership.

std::vector<Violation> check_single_ownership(const Trace& trace) {
  std::vector<Violation> out;
  struct Tenure {
    Epoch epoch = 0;
    std::uint64_t open_seq = 0;
  };
  std::map<PartitionId, std::map<NodeId, Tenure>> open;
  std::map<PartitionId, std::pair<Epoch, std::uint64_t>> last_epoch;
  std::map<std::string, std::pair<Epoch, std::uint64_t>> volume_epoch;

  auto end_all = [&](const NodeId& n) {
    for (auto& [p, tenures] : open) tenures.erase(n);
  };
  for (const auto& e : trace.events()) {
    if (e.kind == EventKind::kCrash) {
      end_all(e.node);
      continue;
    }
    if (e.kind == EventKind::kVolumeAppend) {
      const auto vol = e.payload["volume"].get<std::string>();
      const auto epoch = e.payload["epoch"].get<Epoch>();
      auto it = volume_epoch.find(vol);
      if (it != volume_epoch.end() && epoch < it->second.first) {
        out.push_back({"single_ownership", {it->second.second, e.seq},
                       vol + " accepted an append at epoch " + std::to_string(epoch) +
                           " after epoch " + std::to_string(it->second.first)});
      } else {
        volume_epoch[vol] = {epoch, e.seq};
      }
      continue;
    }
    if (e.kind != EventKind::kLocal) continue;
    const auto ev = e.ev();
    if (ev == "halt") {
      end_all(e.node);
      continue;
    }
    if (e.node.role != Role::kOtm || !e.payload.contains("p")) continue;
    const auto p = e.payload["p"].get<PartitionId>();
    const auto epoch = e.payload.value("epoch", Epoch{0});
    auto& tenures = open[p];
    if (ev == "open") {
      for (const auto& [other, t] : tenures) {
        if (other == e.node) continue;
        out.push_back({"single_ownership", {t.open_seq, e.seq},
                       "partition " + std::to_string(p) + " opened on " + e.node.str() +
                           " (epoch " + std::to_string(epoch) + ") while " + other.str() +
                           " still serves it (epoch " + std::to_string(t.epoch) + ")"});
      }
      if (auto le = last_epoch.find(p); le != last_epoch.end() && epoch < le->second.first) {
        out.push_back({"single_ownership", {le->second.second, e.seq},
                       "partition " + std::to_string(p) + " opened with epoch " +
                           std::to_string(epoch) + " after epoch " +
                           std::to_string(le->second.first)});
      }
      last_epoch[p] = {epoch, e.seq};
      tenures[e.node] = Tenure{epoch, e.seq};
    } else if (ev == "close") {
      tenures.erase(e.node);
    } else if (ev == "admit") {
      auto it = tenures.find(e.node);
      if (it == tenures.end() || it->second.epoch != epoch) {
        out.push_back({"single_ownership", {e.seq},
                       e.node.str() + " admitted a request for partition " + std::to_string(p) +
                           " outside its serving tenure"});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Minitransaction atomicity.

std::vector<Violation> check_mtx_atomicity(const Trace& trace) {
  std::vector<Violation> out;
  struct Vote {
    bool yes = false;
    std::uint64_t seq = 0;
  };
  struct Apply {
    std::string decision;
    std::uint64_t seq = 0;
    SimTime time = 0;
    json writes;
  };
  struct Info {
    std::vector<PartitionId> participants;
    std::uint64_t start_seq = 0;
    std::map<PartitionId, json> fragments;
    std::vector<std::pair<std::string, std::uint64_t>> decisions;
    SimTime commit_time = 0;
    std::map<PartitionId, std::vector<Vote>> votes;
    std::map<PartitionId, std::vector<Apply>> applies;
  };
  std::map<std::string, Info> mtxs;
  std::map<PartitionId, Model> models;
  SimTime grace = 30'000;
  const SimTime end = trace.size() ? trace.events().back().time : 0;

  for (const auto& e : trace.events()) {
    const json& j = e.payload;
    if (e.kind == EventKind::kSend) {
      const json& msg = j["msg"];
      if (msg.is_object() && msg.value("type", "") == "MtxRound") {
        auto& f = mtxs[msg["mtx"].get<std::string>()].fragments;
        f.emplace(msg["partition"].get<PartitionId>(), msg["fragment"]);
      }
      continue;
    }
    if (e.kind != EventKind::kLocal) continue;
    const auto ev = e.ev();
    if (ev == "config") {
      grace = 3 * j.value("lease_duration", SimTime{10'000});
    } else if (ev == "mtx_round_start") {
      Info& info = mtxs[j["mtx"].get<std::string>()];
      info.participants = j["participants"].get<std::vector<PartitionId>>();
      info.start_seq = e.seq;
    } else if (ev == "mtx_decision" || ev == "MTX_RESOLVE") {
      Info& info = mtxs[j["mtx"].get<std::string>()];
      const auto d = j["decision"].get<std::string>();
      if (d == "COMMIT" && info.commit_time == 0) info.commit_time = std::max<SimTime>(e.time, 1);
      info.decisions.emplace_back(d, e.seq);
    } else if (!is_otm_local(e) || !j.contains("p")) {
      continue;
    } else if (ev == "txn_write") {
      models[j["p"].get<PartitionId>()][j["key"].get<Key>()] = Cell{j["value"], e.seq};
    } else if (ev == "recover_done" || ev == "final_state") {
      resync(models[j["p"].get<PartitionId>()], j["store"], e.seq);
    } else if (ev == "mtx_vote") {
      const auto p = j["p"].get<PartitionId>();
      const auto id = j["mtx"].get<std::string>();
      Info& info = mtxs[id];
      const bool yes = j["vote"] == "YES";
      info.votes[p].push_back({yes, e.seq});
      if (!yes) continue;
      const Model& model = models[p];
      json expected = json::object();
      if (auto f = info.fragments.find(p); f != info.fragments.end()) {
        expected = f->second["compares"];
      }
      for (const auto& [k, want] : expected.items()) {
        const json observed = j["observed"].value(k, json(nullptr));
        const json committed = lookup(model, k);
        if (observed != want || committed != want) {
          out.push_back({"mtx_atomicity", {e.seq},
                         "mtx " + id + " voted YES at partition " + std::to_string(p) +
                             " but compare on " + k + " expected " + show(want) +
                             ", committed value was " + show(committed)});
        }
      }
    } else if (ev == "mtx_apply") {
      const auto p = j["p"].get<PartitionId>();
      mtxs[j["mtx"].get<std::string>()].applies[p].push_back(
          {j["decision"].get<std::string>(), e.seq, e.time, j["writes"]});
    }
  }

  for (const auto& [id, info] : mtxs) {
    std::set<std::string> kinds;
    std::vector<std::uint64_t> decision_seqs;
    for (const auto& [d, seq] : info.decisions) {
      kinds.insert(d);
      decision_seqs.push_back(seq);
    }
    if (kinds.size() > 1) {
      out.push_back({"mtx_atomicity", decision_seqs, "mtx " + id + " has conflicting decisions"});
    }
    const bool commit = kinds.size() == 1 && *kinds.begin() == "COMMIT";
    std::uint64_t first_commit_seq = 0;
    for (const auto& [d, seq] : info.decisions) {
      if (d == "COMMIT") {
        first_commit_seq = seq;
        break;
      }
    }
    for (const auto& [p, applies] : info.applies) {
      std::vector<std::uint64_t> commit_seqs;
      for (const auto& a : applies) {
        if (a.decision != "COMMIT") continue;
        commit_seqs.push_back(a.seq);
        if (!commit) {
          std::vector<std::uint64_t> seqs{a.seq};
          seqs.insert(seqs.end(), decision_seqs.begin(), decision_seqs.end());
          out.push_back({"mtx_atomicity", seqs,
                         "mtx " + id + " applied writes at partition " + std::to_string(p) +
                             " without a COMMIT decision"});
        } else if (a.seq < first_commit_seq) {
          out.push_back({"mtx_atomicity", {a.seq, first_commit_seq},
                         "mtx " + id + " applied writes at partition " + std::to_string(p) +
                             " before it was decided"});
        }
        if (auto f = info.fragments.find(p);
            f != info.fragments.end() && f->second["writes"] != a.writes) {
          out.push_back({"mtx_atomicity", {a.seq},
                         "mtx " + id + " applied writes that differ from its fragment at "
                                       "partition " + std::to_string(p)});
        }
      }
      if (commit_seqs.size() > 1) {
        out.push_back({"mtx_atomicity", commit_seqs,
                       "mtx " + id + " applied more than once at partition " +
                           std::to_string(p)});
      }
    }
    if (info.decisions.empty()) continue;
    // Every decision must be justified by the votes logged before it.
    for (const auto& [d, seq] : info.decisions) {
      std::vector<PartitionId> missing;
      std::vector<std::uint64_t> yes_seqs;
      for (PartitionId p : info.participants) {
        bool yes = false;
        if (auto it = info.votes.find(p); it != info.votes.end()) {
          for (const auto& v : it->second) {
            if (v.seq < seq && v.yes) {
              yes = true;
              yes_seqs.push_back(v.seq);
            }
          }
        }
        if (!yes) missing.push_back(p);
      }
      if (d == "COMMIT" && !missing.empty()) {
        out.push_back({"mtx_atomicity", {seq},
                       "mtx " + id + " committed without a YES vote from partition " +
                           std::to_string(missing.front())});
      }
      if (d == "ABORT" && missing.empty() && !info.participants.empty()) {
        bool any_no = false;
        for (const auto& [p, vs] : info.votes) {
          for (const auto& v : vs) any_no |= !v.yes && v.seq < seq;
        }
        if (!any_no) {
          yes_seqs.push_back(seq);
          out.push_back({"mtx_atomicity", yes_seqs,
                         "mtx " + id + " aborted although every participant voted YES"});
        }
      }
    }
    if (commit && info.commit_time + grace <= end) {
      for (const auto& [p, fragment] : info.fragments) {
        if (fragment["writes"].empty()) continue;
        auto it = info.applies.find(p);
        const bool applied =
            it != info.applies.end() &&
            std::any_of(it->second.begin(), it->second.end(),
                        [](const Apply& a) { return a.decision == "COMMIT"; });
        if (!applied) {
          out.push_back({"mtx_atomicity", {first_commit_seq},
                         "mtx " + id + " committed but was never applied at partition " +
                             std::to_string(p)});
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elasticity.

std::vector<Violation> check_elasticity(const Trace& trace) {
  std::vector<Violation> out;
  const TraceEvent* config = nullptr;
  for (const auto& e : trace.events()) {
    if (e.kind == EventKind::kLocal && e.node.role == Role::kMaster && e.ev() == "config") {
      config = &e;
      break;
    }
  }
  if (!config || !config->payload.value("elasticity", false)) return out;
  const json& c = config->payload;
  const SimTime w = c.value("window", SimTime{5000});
  const auto t_high = c.value("t_high", std::uint64_t{100});
  const auto t_low = c.value("t_low", std::uint64_t{10});
  const auto min_otms = std::max<std::uint64_t>(c.value("min_otms", std::uint64_t{1}), 1);
  const SimTime end = trace.events().back().time;
  const std::uint64_t full = end / w;  // windows [0, full) are complete
  if (full == 0) return out;

  struct WindowView {
    std::map<PartitionId, std::uint64_t> load;
    std::map<PartitionId, NodeId> owner;  // at window end
    std::set<NodeId> live;                // at window end
    std::uint64_t first_seq = 0;
    std::uint64_t last_seq = 0;
  };
  std::vector<WindowView> windows(full);
  std::map<PartitionId, NodeId> owner;
  std::set<NodeId> live;
  std::vector<std::pair<SimTime, std::uint64_t>> spawns, retires;
  std::vector<std::tuple<SimTime, std::uint64_t, NodeId>> moves;
  std::uint64_t current = 0;
  auto close_until = [&](std::uint64_t upto) {
    for (; current < upto && current < full; ++current) {
      windows[current].owner = owner;
      windows[current].live = live;
    }
  };
  for (const auto& e : trace.events()) {
    close_until(e.time / w);
    const json& j = e.payload;
    if (e.kind == EventKind::kCrash && e.node.role == Role::kOtm) {
      live.erase(e.node);
      continue;
    }
    if (e.kind != EventKind::kLocal) continue;
    const auto ev = e.ev();
    const std::uint64_t win = e.time / w;
    if (ev == "otm_ready") {
      live.insert(e.node);
    } else if (ev == "retired" || (ev == "halt" && e.node.role == Role::kOtm)) {
      live.erase(e.node);
    } else if (ev == "cas_ok") {
      owner[j["partition"].get<PartitionId>()] = j["owner"].get<NodeId>();
    } else if (ev == "SPAWN") {
      spawns.emplace_back(e.time, e.seq);
    } else if (ev == "RETIRE") {
      retires.emplace_back(e.time, e.seq);
      live.erase(j["otm"].get<NodeId>());
    } else if (ev == "MIGRATE_PHASE1") {
      moves.emplace_back(e.time, e.seq, j["src"].get<NodeId>());
    } else if ((ev == "txn_commit" || (ev == "mtx_apply" && j["decision"] == "COMMIT")) &&
               win < full) {
      WindowView& v = windows[win];
      ++v.load[j["p"].get<PartitionId>()];
      if (v.first_seq == 0) v.first_seq = e.seq;
      v.last_seq = e.seq;
    }
  }
  close_until(full);

  auto otm_load = [&](std::uint64_t win, const NodeId& o) {
    std::uint64_t sum = 0;
    for (const auto& [p, n] : windows[win].load) {
      auto it = windows[win].owner.find(p);
      if (it != windows[win].owner.end() && it->second == o) sum += n;
    }
    return sum;
  };
  auto owned = [&](std::uint64_t win, const NodeId& o) {
    std::size_t n = 0;
    for (const auto& [p, owner_id] : windows[win].owner) n += owner_id == o;
    return n;
  };
  auto span_seqs = [&](std::uint64_t a, std::uint64_t b) {
    std::vector<std::uint64_t> seqs{config->seq};
    if (windows[a].first_seq) seqs.push_back(windows[a].first_seq);
    if (windows[b].last_seq) seqs.push_back(windows[b].last_seq);
    return seqs;
  };

  std::set<std::pair<NodeId, std::uint64_t>> reported;
  for (std::uint64_t win = 0; win + 1 < full; ++win) {
    for (const NodeId& o : windows[win].live) {
      if (!windows[win + 1].live.count(o)) continue;
      if (otm_load(win, o) <= t_high || otm_load(win + 1, o) <= t_high) continue;
      if (owned(win, o) <= 1) continue;
      // Sustained overload: expect a spawn or a move off 'o' within three
      // windows of it being observed.
      const SimTime lo = win * w;
      const SimTime hi = (win + 2 + 3) * w;
      if (hi > end) continue;
      const bool spawned = std::any_of(spawns.begin(), spawns.end(), [&](const auto& s) {
        return s.first >= lo && s.first < hi;
      });
      const bool moved = std::any_of(moves.begin(), moves.end(), [&](const auto& m) {
        return std::get<0>(m) >= lo && std::get<0>(m) < hi && std::get<2>(m) == o;
      });
      if (!spawned && !moved && reported.insert({o, win}).second) {
        out.push_back({"elasticity", span_seqs(win, win + 1),
                       o.str() + " stayed above t_high in windows " + std::to_string(win) +
                           "-" + std::to_string(win + 1) +
                           " and no OTM was spawned or partition moved within 3 windows"});
      }
    }
  }
  // No OTM above t_high for more than five consecutive windows unless it is
  // down to a single partition.
  std::map<NodeId, std::uint64_t> run_start, run_len;
  for (std::uint64_t win = 0; win < full; ++win) {
    for (const NodeId& o : windows[win].live) {
      if (otm_load(win, o) > t_high && owned(win, o) > 1) {
        if (run_len[o] == 0) run_start[o] = win;
        if (++run_len[o] == 6) {
          out.push_back({"elasticity", span_seqs(run_start[o], win),
                         o.str() + " exceeded t_high for more than 5 windows from window " +
                             std::to_string(run_start[o])});
        }
      } else {
        run_len[o] = 0;
      }
    }
  }
  // Sustained system-wide drop below t_low: expect a retirement within five
  // windows while more than the minimum number of OTMs is live.
  for (std::uint64_t win = 0; win + 1 < full; ++win) {
    bool all_low = windows[win].live.size() > min_otms;
    for (std::uint64_t k = win; k <= win + 1 && all_low; ++k) {
      for (const NodeId& o : windows[k].live) all_low &= otm_load(k, o) < t_low;
      all_low &= windows[k].live.size() > min_otms;
    }
    if (!all_low) continue;
    const SimTime lo = win * w;
    const SimTime hi = (win + 2 + 5) * w;
    if (hi > end) continue;
    const bool retired = std::any_of(retires.begin(), retires.end(), [&](const auto& r) {
      return r.first >= lo && r.first < hi;
    });
    if (!retired) {
      out.push_back({"elasticity", span_seqs(win, win + 1),
                     "load stayed below t_low in windows " + std::to_string(win) + "-" +
                         std::to_string(win + 1) + " with " +
                         std::to_string(windows[win].live.size()) +
                         " OTMs live and none retired within 5 windows"});
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernel.

std::vector<Violation> check_kernel(const Trace& trace) {
  std::vector<Violation> out;
  SimTime min_delay = 0;
  SimTime max_delay = 0;
  struct Sent {
    NodeId src;
    NodeId dst;
    SimTime time = 0;
    std::uint64_t seq = 0;
    bool delivered = false;
  };
  std::map<std::uint64_t, Sent> sent;
  std::set<NodeId> down;
  const TraceEvent* prev = nullptr;
  for (const auto& e : trace.events()) {
    if (prev && (e.seq != prev->seq + 1 || e.time < prev->time)) {
      out.push_back({"kernel", {prev->seq, e.seq}, "trace order broken"});
    }
    prev = &e;
    const json& j = e.payload;
    if (e.kind == EventKind::kLocal && e.ev() == "scenario") {
      min_delay = j.value("min_delay", SimTime{0});
      max_delay = j.value("max_delay", SimTime{0});
    }
    if (e.kind == EventKind::kCrash) {
      down.insert(e.node);
      continue;
    }
    if (e.kind == EventKind::kRestart) {
      down.erase(e.node);
      continue;
    }
    if (down.count(e.node)) {
      out.push_back({"kernel", {e.seq}, e.node.str() + " recorded an event while down"});
    }
    if (e.kind == EventKind::kSend) {
      sent[j["id"].get<std::uint64_t>()] = Sent{e.node, j["dst"].get<NodeId>(), e.time, e.seq};
    } else if (e.kind == EventKind::kDeliver) {
      auto it = sent.find(j["id"].get<std::uint64_t>());
      if (it == sent.end() || it->second.src != j["src"].get<NodeId>() ||
          it->second.dst != e.node) {
        out.push_back({"kernel", {e.seq}, "delivery without a matching send"});
        continue;
      }
      Sent& s = it->second;
      if (s.delivered) out.push_back({"kernel", {s.seq, e.seq}, "message delivered twice"});
      s.delivered = true;
      const SimTime d = e.time - s.time;
      if (max_delay > 0 && (d < min_delay || d > max_delay)) {
        out.push_back({"kernel", {s.seq, e.seq},
                       "delivery delay " + std::to_string(d) + " outside the network bounds"});
      }
    }
  }
  return out;
}

const std::vector<std::string>& checker_names() {
  static const std::vector<std::string> names{"serializability", "durability",
                                              "single_ownership", "mtx_atomicity",
                                              "elasticity", "kernel"};
  return names;
}

std::vector<Violation> run_checks(const Trace& trace, const std::vector<std::string>& names) {
  std::set<std::string> wanted;
  for (const auto& n : names) {
    if (n == "all") {
      wanted.insert(checker_names().begin(), checker_names().end());
    } else if (std::find(checker_names().begin(), checker_names().end(), n) ==
               checker_names().end()) {
      throw ConfigError("unknown checker: " + n);
    } else {
      wanted.insert(n);
    }
  }
  std::vector<Violation> out;
  auto add = [&](std::vector<Violation> v) { out.insert(out.end(), v.begin(), v.end()); };
  for (const auto& n : checker_names()) {
    if (!wanted.count(n)) continue;
    if (n == "serializability") add(check_serializability(trace));
    if (n == "durability") add(check_durability(trace));
    if (n == "single_ownership") add(check_single_ownership(trace));
    if (n == "mtx_atomicity") add(check_mtx_atomicity(trace));
    if (n == "elasticity") add(check_elasticity(trace));
    if (n == "kernel") add(check_kernel(trace));
  }
  return out;
}

}  // namespace estore
