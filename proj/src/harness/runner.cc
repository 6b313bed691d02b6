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

#include "estore/harness/runner.h"

#include <algorithm>
#include <memory>

#include "estore/htm/htm_node.h"
#include "estore/master/master_node.h"
#include "estore/metadata/metadata_node.h"
#include "estore/otm/otm_node.h"

namespace estore {
namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool matches(const json& payload, const json& match) {
  for (const auto& [k, v] : match.items()) {
    if (!payload.contains(k) || payload[k] != v) return false;
  }
  return true;
}

std::optional<NodeId> resolve_target(const Trigger& t, const TraceEvent& e) {
  if (t.target == "self") return e.node;
  if (t.target.rfind("field:", 0) == 0) {
    const std::string field = t.target.substr(6);
    if (!e.payload.contains(field) || !e.payload[field].is_string()) return std::nullopt;
    return NodeId::parse(e.payload[field].get<std::string>());
  }
  return NodeId::parse(t.target);
}

json fault_json(const FaultAction& f) {
  json j{{"ev", "fault"}, {"action", f.action}};
  if (f.node) j["node"] = *f.node;
  if (f.partition) j["partition"] = *f.partition;
  if (f.to) j["to"] = *f.to;
  if (!f.sets.empty()) {
    json sets = json::array();
    for (const auto& s : f.sets) sets.push_back(std::vector<NodeId>(s.begin(), s.end()));
    j["sets"] = std::move(sets);
  }
  return j;
}

void apply_fault(Simulator& sim, Cluster& cluster, const FaultAction& f,
                 const NodeFactory& htm_factory) {
  sim.note(cluster.master, fault_json(f));
  if (f.action == "crash") {
    if (sim.has_node(*f.node) && sim.alive(*f.node)) sim.crash_node(*f.node);
  } else if (f.action == "restart") {
    if (sim.has_node(*f.node) && !sim.alive(*f.node)) sim.restart_node(*f.node);
  } else if (f.action == "partition") {
    sim.network().partition_sets = f.sets;
  } else if (f.action == "heal") {
    sim.network().partition_sets.clear();
  } else if (f.action == "migrate") {
    if (auto* master = dynamic_cast<MasterNode*>(sim.instance(cluster.master))) {
      master->request_migration(*f.partition, f.to);
    }
  } else if (f.action == "add_htm") {
    cluster.htms.push_back(sim.add_node(Role::kHtm, htm_factory));
  } else if (f.action == "remove_htm") {
    auto& h = cluster.htms;
    h.erase(std::remove(h.begin(), h.end(), *f.node), h.end());
  }
}

void inspect_final(RunResult& r) {
  Simulator& sim = *r.sim;
  auto* meta = dynamic_cast<MetadataNode*>(sim.instance(r.cluster->metadata));
  if (!meta) return;
  const PartitionMap map = meta->store().snapshot();
  for (const auto& e : map.entries) {
    FinalOwnership fo;
    fo.partition = e.id;
    fo.map_owner = e.owner;
    if (e.owner) {
      auto lease = meta->store().live_lease(*e.owner, sim.now());
      fo.owner_lease_live = lease && lease->epoch == e.owner_lease_epoch;
    }
    for (const NodeId& id : sim.nodes(Role::kOtm)) {
      if (!sim.alive(id)) continue;
      auto* otm = dynamic_cast<OtmNode*>(sim.instance(id));
      if (otm && otm->serving(e.id)) fo.serving.push_back(id);
    }
    if (e.owner && std::count(fo.serving.begin(), fo.serving.end(), *e.owner)) {
      auto* otm = dynamic_cast<OtmNode*>(sim.instance(*e.owner));
      const PartitionEngine* engine = otm->engine(e.id);
      sim.note(*e.owner, {{"ev", "final_state"}, {"p", e.id}, {"epoch", e.ownership_epoch},
                          {"store", engine->committed()}});
    }
    r.ownership.push_back(std::move(fo));
  }
}

}  // namespace

RunResult run_scenario(const Scenario& s, const RunOptions& options) {
  s.validate();
  for (const auto& name : s.checks) {
    if (name != "all" && std::find(checker_names().begin(), checker_names().end(), name) ==
                             checker_names().end()) {
      throw ConfigError("unknown checker: " + name);
    }
  }
  const std::uint64_t seed = options.seed.value_or(s.seed);

  RunResult r;
  r.cluster = std::make_unique<Cluster>();
  Cluster& cluster = *r.cluster;
  cluster.config = s.config;
  cluster.config.derive_defaults(s.network);
  cluster.partitions = s.partitions;
  cluster.initial_otms = s.otms;
  r.control = std::make_unique<WorkloadControl>();
  r.control->max_commits = s.workload.max_commits;
  WorkloadControl* control = r.control.get();
  r.sim = std::make_unique<Simulator>(seed, s.network);
  Simulator& sim = *r.sim;

  for (PartitionId p = 0; p < s.partitions.size(); ++p) sim.create_volume(Cluster::volume_for(p));
  const Cluster* c = &cluster;
  cluster.metadata = sim.add_node(Role::kMetadata, [c](Simulator& sm, NodeId id) {
    return std::make_unique<MetadataNode>(sm, id, *c);
  });
  cluster.master = sim.add_node(Role::kMaster, [c](Simulator& sm, NodeId id) {
    return std::make_unique<MasterNode>(sm, id, *c);
  });
  NodeFactory otm_factory = [c](Simulator& sm, NodeId id) {
    return std::make_unique<OtmNode>(sm, id, *c);
  };
  NodeFactory htm_factory = [c](Simulator& sm, NodeId id) {
    return std::make_unique<HtmNode>(sm, id, *c);
  };
  for (std::uint32_t i = 0; i < s.otms; ++i) sim.add_node(Role::kOtm, otm_factory);
  Simulator* simp = &sim;
  cluster.spawn_otm = [simp, otm_factory] { return simp->add_node(Role::kOtm, otm_factory); };
  for (std::uint32_t i = 0; i < s.htms; ++i) {
    cluster.htms.push_back(sim.add_node(Role::kHtm, htm_factory));
  }
  const WorkloadConfig spec = s.workload;
  const std::uint64_t key_space = s.key_space;
  for (std::uint32_t i = 0; i < s.workload.clients; ++i) {
    const std::uint64_t client_seed = mix_seed(seed, i);
    sim.add_node(Role::kClient, [c, spec, key_space, client_seed, control](Simulator& sm,
                                                                           NodeId id) {
      return std::make_unique<ClientNode>(sm, id, *c, spec, key_space, client_seed, control);
    });
  }
  sim.note(cluster.metadata, {{"ev", "scenario"}, {"name", s.name}, {"seed", seed},
                              {"min_delay", s.network.min_delay},
                              {"max_delay", s.network.max_delay},
                              {"drop_probability", s.network.drop_probability}});

  auto counts = std::make_shared<std::vector<std::uint64_t>>(s.triggers.size(), 0);
  const std::vector<Trigger> triggers = s.triggers;
  sim.add_observer([simp, control, counts, triggers](const TraceEvent& e) {
    if (e.kind != EventKind::kLocal) return;
    const auto ev = e.ev();
    if (ev == "txn_commit" && e.node.role == Role::kOtm) ++control->commits;
    for (std::size_t i = 0; i < triggers.size(); ++i) {
      const Trigger& t = triggers[i];
      if (ev != t.ev || (t.role && e.node.role != *t.role) || !matches(e.payload, t.match)) {
        continue;
      }
      if (++(*counts)[i] != t.nth) continue;
      auto target = resolve_target(t, e);
      if (target && simp->has_node(*target) && simp->alive(*target)) simp->crash_node(*target);
    }
  });

  const SimTime end = options.until.value_or(s.duration);
  std::vector<FaultAction> faults = s.faults;
  std::stable_sort(faults.begin(), faults.end(),
                   [](const FaultAction& a, const FaultAction& b) { return a.at < b.at; });
  try {
    for (const auto& f : faults) {
      if (f.at > end) break;
      sim.run_until(f.at);
      apply_fault(sim, cluster, f, htm_factory);
    }
    sim.run_until(end);
  } catch (const SimulationAborted& e) {
    r.aborted = true;
    r.abort_reason = e.what();
  }
  if (!r.aborted) inspect_final(r);
  r.metrics = compute_metrics(sim.trace());
  if (options.check) r.violations = run_checks(sim.trace(), s.checks);
  return r;
}

}  // namespace estore
