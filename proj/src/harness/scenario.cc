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

#include "estore/harness/scenario.h"

#include <fstream>
#include <sstream>

namespace estore {
namespace {

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown field '" + k + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* name, T& out) {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + name + "': " + e.what());
  }
}

NodeId node_id(const json& j) {
  if (!j.is_string()) throw ConfigError("node ids must be strings");
  auto id = NodeId::parse(j.get<std::string>());
  if (!id) throw ConfigError("bad node id: " + j.get<std::string>());
  return *id;
}

void probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(what + " must be in [0,1]");
}

NetworkConfig parse_network(const json& j) {
  only_keys(j, {"min_delay", "max_delay", "drop_probability"}, "network");
  NetworkConfig n;
  read(j, "min_delay", n.min_delay);
  read(j, "max_delay", n.max_delay);
  read(j, "drop_probability", n.drop_probability);
  return n;
}

SystemConfig parse_config(const json& j) {
  only_keys(j,
            {"lease_duration", "safety_margin", "checkpoint_interval", "checkpoint_commits",
             "stats_window", "t_high", "t_low", "drain_deadline", "mtx_timeout",
             "client_deadline", "detect_interval", "txn_idle_timeout", "elasticity", "min_otms",
             "mutations", "otm_clock_lag"},
            "config");
  SystemConfig c;
  read(j, "lease_duration", c.lease_duration);
  read(j, "safety_margin", c.safety_margin);
  read(j, "checkpoint_interval", c.checkpoint_interval);
  read(j, "checkpoint_commits", c.checkpoint_commits);
  read(j, "stats_window", c.stats_window);
  read(j, "t_high", c.t_high);
  read(j, "t_low", c.t_low);
  read(j, "drain_deadline", c.drain_deadline);
  read(j, "mtx_timeout", c.mtx_timeout);
  read(j, "client_deadline", c.client_deadline);
  read(j, "detect_interval", c.detect_interval);
  read(j, "txn_idle_timeout", c.txn_idle_timeout);
  read(j, "elasticity", c.elasticity);
  read(j, "min_otms", c.min_otms);
  if (j.contains("mutations")) {
    const json& m = j.at("mutations");
    only_keys(m, {"skip_forced_commit", "disable_safety_margin", "apply_mtx_on_vote"},
              "mutations");
    read(m, "skip_forced_commit", c.mutations.skip_forced_commit);
    read(m, "disable_safety_margin", c.mutations.disable_safety_margin);
    read(m, "apply_mtx_on_vote", c.mutations.apply_mtx_on_vote);
  }
  if (j.contains("otm_clock_lag")) {
    const json& lag = j.at("otm_clock_lag");
    if (!lag.is_object()) throw ConfigError("otm_clock_lag must map OTM index to ticks");
    for (const auto& [k, v] : lag.items()) {
      try {
        c.otm_clock_lag[static_cast<std::uint32_t>(std::stoul(k))] = v.get<SimTime>();
      } catch (const std::exception&) {
        throw ConfigError("bad otm_clock_lag entry: " + k);
      }
    }
  }
  return c;
}

WorkloadConfig parse_workload(const json& j) {
  only_keys(j,
            {"clients", "mix", "distribution", "zipf_s", "min_ops", "max_ops", "read_fraction",
             "ro_keys", "mtx_partitions", "compare_probability", "rate", "max_commits", "start",
             "stop"},
            "workload");
  WorkloadConfig w;
  read(j, "clients", w.clients);
  if (j.contains("mix")) {
    const json& m = j.at("mix");
    only_keys(m, {"read_only", "txn", "mtx"}, "workload.mix");
    w.read_only = m.value("read_only", 0.0);
    w.txn = m.value("txn", 0.0);
    w.mtx = m.value("mtx", 0.0);
  }
  read(j, "distribution", w.distribution);
  read(j, "zipf_s", w.zipf_s);
  read(j, "min_ops", w.min_ops);
  read(j, "max_ops", w.max_ops);
  read(j, "read_fraction", w.read_fraction);
  read(j, "ro_keys", w.ro_keys);
  read(j, "mtx_partitions", w.mtx_partitions);
  read(j, "compare_probability", w.compare_probability);
  if (j.contains("rate")) {
    const json& r = j.at("rate");
    w.rate.clear();
    if (r.is_number()) {
      w.rate.push_back({0, r.get<std::uint64_t>()});
    } else if (r.is_array()) {
      for (const auto& point : r) {
        only_keys(point, {"at", "per_window"}, "workload.rate");
        w.rate.push_back({point.value("at", SimTime{0}), point.at("per_window").get<std::uint64_t>()});
      }
    } else {
      throw ConfigError("workload.rate must be a number or a list");
    }
  }
  read(j, "max_commits", w.max_commits);
  read(j, "start", w.start);
  read(j, "stop", w.stop);
  return w;
}

FaultAction parse_fault(const json& j) {
  only_keys(j, {"at", "action", "node", "sets", "partition", "to"}, "fault");
  FaultAction f;
  if (!j.contains("at") || !j.contains("action")) throw ConfigError("faults need 'at' and 'action'");
  read(j, "at", f.at);
  read(j, "action", f.action);
  if (j.contains("node")) f.node = node_id(j.at("node"));
  if (j.contains("to")) f.to = node_id(j.at("to"));
  if (j.contains("partition")) f.partition = j.at("partition").get<PartitionId>();
  if (j.contains("sets")) {
    for (const auto& set : j.at("sets")) {
      std::set<NodeId> s;
      for (const auto& n : set) s.insert(node_id(n));
      f.sets.push_back(std::move(s));
    }
  }
  return f;
}

Trigger parse_trigger(const json& j) {
  only_keys(j, {"on", "nth", "role", "match", "crash"}, "trigger");
  Trigger t;
  if (!j.contains("on")) throw ConfigError("triggers need 'on'");
  read(j, "on", t.ev);
  read(j, "nth", t.nth);
  read(j, "crash", t.target);
  if (j.contains("match")) t.match = j.at("match");
  if (j.contains("role")) {
    const std::string r = j.at("role").get<std::string>();
    auto id = NodeId::parse(r + "0");
    if (!id) throw ConfigError("unknown role: " + r);
    t.role = id->role;
  }
  return t;
}

}  // namespace

Scenario Scenario::from_json(const json& j) {
  only_keys(j,
            {"name", "seed", "duration", "key_space", "partitions", "ranges", "otms", "htms",
             "network", "config", "workload", "faults", "triggers", "checks"},
            "scenario");
  Scenario s;
  read(j, "name", s.name);
  read(j, "seed", s.seed);
  read(j, "duration", s.duration);
  read(j, "key_space", s.key_space);
  read(j, "otms", s.otms);
  read(j, "htms", s.htms);
  if (j.contains("ranges")) {
    read(j, "ranges", s.partitions);
  } else {
    std::uint32_t count = 1;
    read(j, "partitions", count);
    s.partitions = even_ranges(s.key_space, count);
  }
  if (j.contains("network")) s.network = parse_network(j.at("network"));
  if (j.contains("config")) s.config = parse_config(j.at("config"));
  if (j.contains("workload")) s.workload = parse_workload(j.at("workload"));
  if (j.contains("faults")) {
    for (const auto& f : j.at("faults")) s.faults.push_back(parse_fault(f));
  }
  if (j.contains("triggers")) {
    for (const auto& t : j.at("triggers")) s.triggers.push_back(parse_trigger(t));
  }
  if (j.contains("checks")) {
    const json& c = j.at("checks");
    s.checks = c.is_string() ? std::vector<std::string>{c.get<std::string>()}
                             : c.get<std::vector<std::string>>();
  }
  s.validate();
  return s;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario: " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario " + path + ": " + e.what());
  }
  return from_json(j);
}

void Scenario::validate() const {
  if (duration == 0) throw ConfigError("duration must be positive");
  if (partitions.empty()) throw ConfigError("at least one partition is required");
  if (key_space < partitions.size()) throw ConfigError("fewer keys than partitions");
  if (!partitions.front().lo.empty() || !partitions.back().hi.empty()) {
    throw ConfigError("partition ranges must start at \"\" and end unbounded");
  }
  for (std::size_t i = 0; i + 1 < partitions.size(); ++i) {
    if (partitions[i].hi.empty() || partitions[i].hi != partitions[i + 1].lo ||
        partitions[i].lo >= partitions[i].hi) {
      throw ConfigError("partition ranges must tile the key space in order");
    }
  }
  if (otms == 0) throw ConfigError("at least one OTM is required");
  network.validate();
  probability(network.drop_probability, "network.drop_probability");
  if (config.lease_duration == 0 || config.stats_window == 0) {
    throw ConfigError("lease_duration and stats_window must be positive");
  }
  if (config.safety_margin >= config.lease_duration) {
    throw ConfigError("safety_margin must be below lease_duration");
  }
  if (config.t_low > config.t_high) throw ConfigError("t_low must not exceed t_high");
  const WorkloadConfig& w = workload;
  probability(w.read_fraction, "workload.read_fraction");
  probability(w.compare_probability, "workload.compare_probability");
  if (w.read_only < 0 || w.txn < 0 || w.mtx < 0) throw ConfigError("mix weights must be >= 0");
  if (w.clients > 0 && w.read_only + w.txn + w.mtx <= 0) {
    throw ConfigError("workload mix is empty");
  }
  const double total = w.read_only + w.txn + w.mtx;
  if (total > 0) {
    probability(w.read_only / total, "workload.mix.read_only");
    probability(w.mtx / total, "workload.mix.mtx");
  }
  if (w.distribution != "uniform" && w.distribution != "zipfian") {
    throw ConfigError("workload.distribution must be uniform or zipfian");
  }
  if (w.distribution == "zipfian" && !(w.zipf_s > 0)) throw ConfigError("zipf_s must be > 0");
  if (w.min_ops > w.max_ops) throw ConfigError("min_ops must not exceed max_ops");
  if (w.clients > 0 && htms == 0) throw ConfigError("clients need at least one HTM");
  static const std::set<std::string> actions{"crash",   "restart",  "partition", "heal",
                                             "migrate", "add_htm", "remove_htm"};
  for (const auto& f : faults) {
    if (!actions.count(f.action)) throw ConfigError("unknown fault action: " + f.action);
    if (f.at > duration) throw ConfigError("fault time beyond duration");
    if ((f.action == "crash" || f.action == "restart" || f.action == "remove_htm") && !f.node) {
      throw ConfigError(f.action + " needs a node");
    }
    if (f.action == "partition" && f.sets.size() < 2) {
      throw ConfigError("partition needs at least two sets");
    }
    if (f.action == "migrate" && (!f.partition || *f.partition >= partitions.size())) {
      throw ConfigError("migrate needs a valid partition");
    }
  }
  for (const auto& t : triggers) {
    if (t.ev.empty() || t.nth == 0) throw ConfigError("trigger needs an event and nth >= 1");
    if (t.target != "self" && t.target.rfind("field:", 0) != 0 && !NodeId::parse(t.target)) {
      throw ConfigError("bad trigger target: " + t.target);
    }
    if (!t.match.is_object()) throw ConfigError("trigger match must be an object");
  }
}

}  // namespace estore
