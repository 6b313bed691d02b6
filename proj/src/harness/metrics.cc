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

#include "estore/harness/metrics.h"

#include <algorithm>
#include <cmath>
#include <set>

namespace estore {

SimTime percentile(std::vector<SimTime> sample, double pct) {
  if (sample.empty()) return 0;
  std::sort(sample.begin(), sample.end());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(sample.size())));
  rank = std::clamp<std::size_t>(rank, 1, sample.size());
  return sample[rank - 1];
}

json Metrics::to_json() const {
  json ws = json::array();
  for (const auto& w : windows) {
    ws.push_back({{"window", w.window}, {"committed", w.committed}, {"aborted", w.aborted},
                  {"rejected", w.rejected}, {"live_otms", w.live_otms}});
  }
  return json{{"window", window},
              {"committed", committed},
              {"commit_records", commit_records},
              {"aborted", aborted},
              {"rejected", rejected},
              {"client_acked", client_acked},
              {"latency_p50", latency_p50},
              {"latency_p99", latency_p99},
              {"migrations", migrations},
              {"spawns", spawns},
              {"retires", retires},
              {"recovery_latencies", recovery_latencies},
              {"mtx", {{"commit", mtx_commit}, {"abort", mtx_abort}, {"unresolved", mtx_unresolved}}},
              {"fenced_appends", fenced_appends},
              {"windows", std::move(ws)}};
}

Metrics compute_metrics(const Trace& trace) {
  Metrics m;
  m.window = 5000;
  for (const auto& e : trace.events()) {
    if (e.kind == EventKind::kLocal && e.node.role == Role::kMaster && e.ev() == "config") {
      m.window = e.payload.value("window", m.window);
      break;
    }
  }
  std::set<NodeId> live;
  std::vector<SimTime> latencies;
  auto at = [&](SimTime t) -> WindowMetrics& {
    const std::uint64_t w = t / m.window;
    while (m.windows.size() <= w) {
      WindowMetrics next;
      next.window = m.windows.size();
      next.live_otms = static_cast<std::uint32_t>(live.size());
      m.windows.push_back(next);
    }
    return m.windows[w];
  };
  for (const auto& e : trace.events()) {
    WindowMetrics& win = at(e.time);
    const json& j = e.payload;
    if (e.kind == EventKind::kSend) {
      const json& msg = j["msg"];
      if (!msg.is_object() || e.node.role != Role::kOtm) continue;
      const auto type = msg.value("type", "");
      if (type == "CommitOk") {
        ++m.committed;
        ++win.committed;
      } else if (type == "Rejected") {
        ++m.rejected;
        ++win.rejected;
      }
      continue;
    }
    if (e.kind == EventKind::kCrash && e.node.role == Role::kOtm) {
      live.erase(e.node);
      win.live_otms = static_cast<std::uint32_t>(live.size());
      continue;
    }
    if (e.kind != EventKind::kLocal) continue;
    const auto ev = e.ev();
    if (ev == "txn_commit") {
      ++m.commit_records;
    } else if (ev == "txn_abort") {
      ++m.aborted;
      ++win.aborted;
    } else if (ev == "txn_acked") {
      ++m.client_acked;
      latencies.push_back(j["latency"].get<SimTime>());
    } else if (ev == "migrate_done") {
      ++m.migrations;
    } else if (ev == "SPAWN") {
      ++m.spawns;
    } else if (ev == "RETIRE") {
      ++m.retires;
      live.erase(j["otm"].get<NodeId>());
    } else if (ev == "RECOVER_END" && j.value("ok", false)) {
      m.recovery_latencies.push_back(j["latency"].get<SimTime>());
    } else if (ev == "client_mtx") {
      const auto outcome = j["outcome"].get<std::string>();
      if (outcome == "COMMIT") {
        ++m.mtx_commit;
      } else if (outcome == "ABORT") {
        ++m.mtx_abort;
      } else {
        ++m.mtx_unresolved;
      }
    } else if (ev == "append_rejected") {
      ++m.fenced_appends;
    } else if (ev == "otm_ready") {
      live.insert(e.node);
    } else if (ev == "retired" || (ev == "halt" && e.node.role == Role::kOtm)) {
      live.erase(e.node);
    }
    win.live_otms = static_cast<std::uint32_t>(live.size());
  }
  m.latency_p50 = percentile(latencies, 50);
  m.latency_p99 = percentile(latencies, 99);
  return m;
}

}  // namespace estore
