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

#include "estore/harness/client_node.h"

#include <algorithm>
#include <utility>

namespace estore {

ClientNode::ClientNode(Simulator& sim, NodeId self, const Cluster& cluster,
                       const WorkloadConfig& spec, std::uint64_t key_space, std::uint64_t seed,
                       const WorkloadControl* control)
    : NodeBase(sim, self),
      cluster_(cluster),
      spec_(spec),
      control_(control),
      gen_(spec, cluster.partitions, key_space, seed, self.str()) {}

void ClientNode::on_start() {
  const std::uint64_t rate = std::max<std::uint64_t>(spec_.rate_at(spec_.start), 1);
  const SimTime interval =
      std::max<SimTime>(cluster_.config.stats_window * spec_.clients / rate, 1);
  const SimTime jitter = gen_.rng().uniform(0, interval - 1);
  const SimTime first = spec_.start > now() ? spec_.start - now() : 0;
  last_issue_ = now() + first + jitter;
  after(first + jitter, [this] { issue(); });
}

void ClientNode::on_message(const NodeId& /*from*/, const json& msg) {
  // Anything that is not a reply to a live call (late answers, fire-and-forget
  // acknowledgements) is ignored.
  complete_call(msg);
}

void ClientNode::schedule_next() {
  if (control_ && control_->exhausted()) return;
  if (spec_.stop > 0 && now() >= spec_.stop) return;
  const std::uint64_t rate = spec_.rate_at(now());
  if (rate == 0) {
    after(std::max<SimTime>(cluster_.config.stats_window / 10, 1), [this] { schedule_next(); });
    return;
  }
  const SimTime interval =
      std::max<SimTime>(cluster_.config.stats_window * spec_.clients / rate, 1);
  const SimTime due = last_issue_ + interval;
  after(due > now() ? due - now() : 0, [this] { issue(); });
}

void ClientNode::issue() {
  if (control_ && control_->exhausted()) return;
  if (spec_.stop > 0 && now() >= spec_.stop) return;
  if (spec_.rate_at(now()) == 0) {
    schedule_next();
    return;
  }
  last_issue_ = now();
  Operation op = gen_.next();
  switch (op.kind) {
    case Operation::Kind::kReadOnly:
      run_read_only(std::move(op));
      break;
    case Operation::Kind::kMtx:
      run_mtx(std::move(op));
      break;
    case Operation::Kind::kTxn: {
      auto t = std::make_shared<TxnState>();
      t->tag = self_.str() + ":" + std::to_string(op.seq);
      t->op = std::move(op);
      t->started = now();
      note({{"ev", "txn_start"}, {"tag", t->tag}, {"p", t->op.partition}});
      open_txn(t, std::nullopt);
      break;
    }
  }
}

std::optional<NodeId> ClientNode::pick_htm() {
  if (cluster_.htms.empty()) return std::nullopt;
  return cluster_.htms[rr_++ % cluster_.htms.size()];
}

void ClientNode::finished() { schedule_next(); }

void ClientNode::open_txn(const TxnPtr& t, std::optional<Epoch> rejected) {
  auto htm = pick_htm();
  if (!htm) return finish_txn(t, "unavailable");
  json msg{{"type", "TxnOpen"}, {"partition", t->op.partition}};
  if (rejected) msg["rejected_epoch"] = *rejected;
  if (suspect_.erase(t->op.partition)) msg["refresh"] = true;
  call(*htm, std::move(msg), cluster_.config.client_deadline, [this, t](const json* resp) {
    if (!resp) return finish_txn(t, "timeout");
    if (resp->at("type") != "TxnRoute") return finish_txn(t, "unavailable");
    t->owner = resp->at("owner").get<NodeId>();
    t->epoch = resp->at("epoch").get<Epoch>();
    begin_txn(t);
  });
}

void ClientNode::begin_txn(const TxnPtr& t) {
  call(t->owner,
       {{"type", "Begin"}, {"partition", t->op.partition}, {"epoch", t->epoch}, {"tag", t->tag}},
       cluster_.config.client_deadline, [this, t](const json* resp) {
         if (!resp) {
           suspect_.insert(t->op.partition);
           return finish_txn(t, "timeout");
         }
         const auto& type = resp->at("type");
         if (type == "BeginOk") {
           t->txn = resp->at("txn").get<std::string>();
           next_step(t);
         } else if (type == "Rejected" && t->reopens < 3) {
           ++t->reopens;
           open_txn(t, t->epoch);
         } else {
           finish_txn(t, type == "Rejected" ? "rejected" : "error");
         }
       });
}

void ClientNode::next_step(const TxnPtr& t) {
  if (t->step == t->op.steps.size()) return commit_txn(t);
  const TxnStep& s = t->op.steps[t->step];
  json msg{{"type", s.write ? "Write" : "Read"}, {"partition", t->op.partition},
           {"epoch", t->epoch}, {"txn", t->txn}, {"key", s.key}};
  if (s.write) msg["value"] = s.value;
  call(t->owner, std::move(msg), cluster_.config.client_deadline, [this, t](const json* resp) {
    if (!resp) {
      suspect_.insert(t->op.partition);
      send(t->owner, {{"type", "Abort"}, {"partition", t->op.partition}, {"epoch", t->epoch},
                      {"txn", t->txn}});
      return finish_txn(t, "timeout");
    }
    const auto& type = resp->at("type");
    if (type == "ReadOk" || type == "WriteOk") {
      ++t->step;
      next_step(t);
    } else if (type == "Aborted") {
      finish_txn(t, "aborted");
    } else {
      finish_txn(t, type == "Rejected" ? "rejected" : "error");
    }
  });
}

void ClientNode::commit_txn(const TxnPtr& t) {
  call(t->owner,
       {{"type", "Commit"}, {"partition", t->op.partition}, {"epoch", t->epoch}, {"txn", t->txn}},
       cluster_.config.client_deadline, [this, t](const json* resp) {
         if (!resp) {
           suspect_.insert(t->op.partition);
           return finish_txn(t, "timeout");
         }
         const auto& type = resp->at("type");
         if (type == "CommitOk") {
           note({{"ev", "txn_acked"}, {"tag", t->tag}, {"p", t->op.partition}, {"txn", t->txn},
                 {"owner", t->owner}, {"latency", now() - t->started}});
           finish_txn(t, "committed");
         } else {
           finish_txn(t, type == "Aborted" ? "aborted" : type == "Rejected" ? "rejected" : "error");
         }
       });
}

void ClientNode::finish_txn(const TxnPtr& t, const std::string& outcome) {
  note({{"ev", "client_txn"}, {"tag", t->tag}, {"outcome", outcome}});
  finished();
}

void ClientNode::run_read_only(Operation op) {
  auto htm = pick_htm();
  if (!htm) {
    note({{"ev", "ro_done"}, {"seq", op.seq}, {"ok", false}});
    return finished();
  }
  call(*htm, {{"type", "ReadOnly"}, {"keys", op.keys}}, cluster_.config.client_deadline,
       [this, seq = op.seq](const json* resp) {
         note({{"ev", "ro_done"}, {"seq", seq},
               {"ok", resp != nullptr && resp->at("type") == "ReadOnlyOk"}});
         finished();
       });
}

void ClientNode::run_mtx(Operation op) {
  const std::string mtx = self_.str() + "-" + std::to_string(op.seq);
  auto htm = pick_htm();
  if (!htm) {
    note({{"ev", "client_mtx"}, {"mtx", mtx}, {"outcome", "UNAVAILABLE"}});
    return finished();
  }
  json compares = json::object();
  for (const auto& [k, v] : op.compares) compares[k] = v ? json(*v) : json(nullptr);
  note({{"ev", "mtx_submit"}, {"mtx", mtx}, {"htm", *htm}});
  call(*htm,
       {{"type", "MtxSubmit"}, {"mtx", mtx}, {"compares", std::move(compares)},
        {"reads", op.keys}, {"writes", op.writes}},
       cluster_.config.client_deadline + cluster_.config.mtx_timeout,
       [this, mtx](const json* resp) {
         note({{"ev", "client_mtx"}, {"mtx", mtx},
               {"outcome", resp ? resp->at("outcome").get<std::string>() : "TIMEOUT"}});
         finished();
       });
}

}  // namespace estore
