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

#include "estore/htm/htm_node.h"

#include <algorithm>
#include <memory>
#include <set>
#include <utility>

namespace estore {

HtmNode::HtmNode(Simulator& sim, NodeId self, const Cluster& cluster)
    : NodeBase(sim, self), cluster_(cluster), config_(cluster.config) {}

void HtmNode::on_message(const NodeId& from, const json& msg) {
  if (complete_call(msg)) return;
  const std::string& type = msg.at("type").get_ref<const std::string&>();
  if (type == "TxnOpen") {
    handle_open(from, msg);
  } else if (type == "ReadOnly") {
    handle_read_only(from, msg);
  } else if (type == "MtxSubmit") {
    handle_submit(from, msg);
  } else if (type == "Vote") {
    handle_vote(msg.at("mtx").get<std::string>(), msg.at("partition").get<PartitionId>(),
                msg.at("yes").get<bool>(), msg.value("reads", json::object()));
  } else if (type == "Rejected" && msg.contains("mtx")) {
    // The participant logged nothing; counts as a NO.
    handle_vote(msg.at("mtx").get<std::string>(), msg.at("partition").get<PartitionId>(), false,
                json::object());
  }
}

void HtmNode::refresh(std::function<void()> done) {
  fetch_waiters_.push_back(std::move(done));
  if (fetching_) return;
  fetching_ = true;
  call(cluster_.metadata, {{"type", "GetMap"}}, config_.mtx_timeout, [this](const json* resp) {
    fetching_ = false;
    if (resp) {
      cache_.update(resp->at("map").get<PartitionMap>(), now());
      note({{"ev", "route_refresh"}});
    }
    auto waiters = std::move(fetch_waiters_);
    fetch_waiters_.clear();
    for (auto& w : waiters) w();
  });
}

void HtmNode::route(PartitionId p, std::optional<Epoch> rejected_epoch, SimTime deadline,
                    RouteFn done) {
  const bool suspect = suspect_.erase(p) > 0;
  if (auto r = cache_.lookup(p);
      r && !suspect && (!rejected_epoch || !cache_.stale(p, *rejected_epoch))) {
    done(r);
    return;
  }
  refresh([this, p, rejected_epoch, deadline, done = std::move(done)]() mutable {
    auto r = cache_.lookup(p);
    if (r && (!rejected_epoch || r->epoch > *rejected_epoch)) {
      done(r);
      return;
    }
    const SimTime backoff = std::max<SimTime>(config_.mtx_timeout / 2, 1);
    if (now() + backoff >= deadline) {
      done(std::nullopt);
      return;
    }
    after(backoff, [this, p, rejected_epoch, deadline, done = std::move(done)]() mutable {
      route(p, rejected_epoch, deadline, std::move(done));
    });
  });
}

void HtmNode::handle_open(const NodeId& from, const json& msg) {
  const PartitionId p = msg.contains("key") ? cluster_.partition_of(msg.at("key").get<Key>())
                                            : msg.at("partition").get<PartitionId>();
  std::optional<Epoch> rejected;
  if (msg.contains("rejected_epoch")) rejected = msg.at("rejected_epoch").get<Epoch>();
  if (msg.value("refresh", false)) suspect_.insert(p);
  route(p, rejected, now() + config_.client_deadline, [this, from, msg, p](std::optional<Route> r) {
    if (!r) {
      reply(from, msg, {{"type", "Unavailable"}, {"partition", p}});
      return;
    }
    reply(from, msg, {{"type", "TxnRoute"}, {"partition", p}, {"owner", r->owner},
                      {"epoch", r->epoch}});
  });
}

void HtmNode::read_partition(PartitionId p, json keys, std::optional<Epoch> rejected,
                             SimTime deadline, std::function<void(const json*)> done) {
  route(p, rejected, deadline,
        [this, p, keys, deadline, done = std::move(done)](std::optional<Route> r) mutable {
          if (!r || now() >= deadline) {
            done(nullptr);
            return;
          }
          const Epoch epoch = r->epoch;
          call(r->owner, {{"type", "SingleRead"}, {"partition", p}, {"epoch", epoch}, {"keys", keys}},
               deadline - now(),
               [this, p, keys, epoch, deadline, done = std::move(done)](const json* resp) mutable {
                 if (!resp) {
                   suspect_.insert(p);
                   done(nullptr);
                 } else if (resp->at("type") == "SingleReadOk") {
                   done(&resp->at("values"));
                 } else if (resp->at("type") == "Rejected" && now() < deadline) {
                   read_partition(p, keys, epoch, deadline, std::move(done));
                 } else {
                   done(nullptr);
                 }
               });
        });
}

void HtmNode::handle_read_only(const NodeId& from, const json& msg) {
  std::map<PartitionId, json> groups;
  for (const auto& k : msg.at("keys")) {
    groups[cluster_.partition_of(k.get<Key>())].push_back(k);
  }
  struct Gather {
    std::size_t pending = 0;
    bool failed = false;
    json values = json::object();
  };
  auto g = std::make_shared<Gather>();
  g->pending = groups.size();
  if (groups.empty()) {
    reply(from, msg, {{"type", "ReadOnlyOk"}, {"values", g->values}});
    return;
  }
  const SimTime deadline = now() + config_.client_deadline;
  for (auto& [p, keys] : groups) {
    read_partition(p, std::move(keys), std::nullopt, deadline, [this, g, from, msg](const json* v) {
      if (v) {
        for (const auto& [k, val] : v->items()) g->values[k] = val;
      } else {
        g->failed = true;
      }
      if (--g->pending > 0) return;
      if (g->failed) {
        reply(from, msg, {{"type", "ReadOnlyFailed"}});
      } else {
        reply(from, msg, {{"type", "ReadOnlyOk"}, {"values", g->values}});
      }
    });
  }
}

void HtmNode::handle_submit(const NodeId& from, const json& msg) {
  const std::string mtx = msg.at("mtx").get<std::string>();
  if (rounds_.count(mtx)) return;
  Round round;
  round.client = from;
  round.request = msg;
  const json compares = msg.value("compares", json::object());
  const json reads = msg.value("reads", json::array());
  const json writes = msg.value("writes", json::object());
  for (const auto& [k, v] : compares.items()) {
    round.fragments[cluster_.partition_of(k)].compares[k] =
        v.is_null() ? std::nullopt : std::optional<Value>(v.get<Value>());
  }
  for (const auto& k : reads) {
    round.fragments[cluster_.partition_of(k.get<Key>())].reads.insert(k.get<Key>());
  }
  for (const auto& [k, v] : writes.items()) {
    round.fragments[cluster_.partition_of(k)].writes[k] = v.get<Value>();
  }
  round.unrouted = round.fragments.size();
  std::vector<PartitionId> parts;
  for (const auto& [p, f] : round.fragments) parts.push_back(p);
  rounds_[mtx] = std::move(round);
  if (parts.empty()) {
    decide(mtx, Decision::kCommit);
    return;
  }
  const SimTime deadline = now() + config_.mtx_timeout;
  rounds_[mtx].timer = after(config_.mtx_timeout, [this, mtx] {
    if (auto it = rounds_.find(mtx); it != rounds_.end()) {
      for (const auto& [p, f] : it->second.fragments) {
        if (!it->second.votes.count(p)) suspect_.insert(p);
      }
    }
    give_up(mtx, "UNRESOLVED", "deadline");
  });
  for (PartitionId p : parts) {
    route(p, std::nullopt, deadline, [this, mtx, p](std::optional<Route> r) {
      auto it = rounds_.find(mtx);
      if (it == rounds_.end() || it->second.sent) return;
      if (!r) {
        give_up(mtx, "ABORT", "unroutable");
        return;
      }
      it->second.routes[p] = *r;
      if (--it->second.unrouted == 0) start_round(mtx);
    });
  }
}

void HtmNode::start_round(const std::string& mtx) {
  Round& round = rounds_.at(mtx);
  round.sent = true;
  std::vector<PartitionId> participants;
  for (const auto& [p, f] : round.fragments) participants.push_back(p);
  note({{"ev", "mtx_round_start"}, {"mtx", mtx}, {"participants", participants}});
  // The note above may have crashed this node; sends are then suppressed.
  for (const auto& [p, fragment] : round.fragments) {
    const Route& r = round.routes.at(p);
    send(r.owner, {{"type", "MtxRound"}, {"mtx", mtx}, {"partition", p}, {"epoch", r.epoch},
                   {"fragment", fragment}, {"participants", participants}});
  }
}

void HtmNode::handle_vote(const std::string& mtx, PartitionId p, bool yes, const json& reads) {
  auto it = rounds_.find(mtx);
  if (it == rounds_.end() || !it->second.sent || it->second.votes.count(p)) return;
  Round& round = it->second;
  round.votes[p] = yes;
  note({{"ev", "mtx_vote_recv"}, {"mtx", mtx}, {"p", p}, {"yes", yes}});
  for (const auto& [k, v] : reads.items()) round.reads[k] = v;
  if (!yes) {
    decide(mtx, Decision::kAbort);
    return;
  }
  if (round.votes.size() < round.fragments.size()) return;
  note({{"ev", "mtx_all_yes"}, {"mtx", mtx}});
  decide(mtx, Decision::kCommit);
}

void HtmNode::decide(const std::string& mtx, Decision decision) {
  auto it = rounds_.find(mtx);
  if (it == rounds_.end()) return;
  Round round = std::move(it->second);
  rounds_.erase(it);
  cancel(round.timer);
  note({{"ev", "mtx_decision"}, {"mtx", mtx}, {"decision", decision_name(decision)},
        {"by", "coordinator"}});
  for (const auto& [p, yes] : round.votes) {
    if (!yes) continue;
    const Route& r = round.routes.at(p);
    send(r.owner, {{"type", "MtxDecision"}, {"mtx", mtx}, {"partition", p},
                   {"decision", decision_name(decision)}});
    note({{"ev", "mtx_decision_sent"}, {"mtx", mtx}, {"p", p},
          {"decision", decision_name(decision)}});
  }
  json result{{"type", "MtxResult"}, {"mtx", mtx}, {"outcome", decision_name(decision)}};
  if (decision == Decision::kCommit) result["reads"] = round.reads;
  reply(round.client, round.request, std::move(result));
}

void HtmNode::give_up(const std::string& mtx, const std::string& outcome,
                      const std::string& reason) {
  auto it = rounds_.find(mtx);
  if (it == rounds_.end()) return;
  Round round = std::move(it->second);
  rounds_.erase(it);
  cancel(round.timer);
  note({{"ev", "mtx_give_up"}, {"mtx", mtx}, {"outcome", outcome}, {"reason", reason}});
  reply(round.client, round.request,
        {{"type", "MtxResult"}, {"mtx", mtx}, {"outcome", outcome}, {"reason", reason}});
}

}  // namespace estore
