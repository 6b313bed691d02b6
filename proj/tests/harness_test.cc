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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <gtest/gtest.h>

#include "estore/harness/checkers.h"
#include "estore/harness/metrics.h"
#include "estore/harness/runner.h"
#include "estore/harness/scenario.h"
#include "estore/harness/workload.h"

namespace estore {
namespace {

// ---- Workload ----

TEST(WorkloadTest, ZipfianRankOneMatchesHarmonicMass) {
  const KeyDistribution d(1000, "zipfian", 1.0);
  double h = 0;
  for (int i = 1; i <= 1000; ++i) h += 1.0 / i;
  EXPECT_NEAR(d.mass(0), 1.0 / h, 1e-9);
  Rng rng(11);
  std::uint64_t hits = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) hits += d.draw(rng) == 0;
  const double freq = static_cast<double>(hits) / draws;
  EXPECT_NEAR(freq, 1.0 / h, 0.1 / h);
}

TEST(WorkloadTest, UniformOverOneKeyAlwaysHitsIt) {
  WorkloadConfig spec;
  spec.distribution = "uniform";
  const auto ops = gen_workload(spec, even_ranges(1, 1), 1, 5, 200);
  for (const auto& op : ops) {
    for (const auto& s : op.steps) EXPECT_EQ(s.key, key_name(0));
    for (const auto& k : op.keys) EXPECT_EQ(k, key_name(0));
    for (const auto& [k, v] : op.writes) EXPECT_EQ(k, key_name(0));
  }
}

TEST(WorkloadTest, GeneratedOperationsRespectPartitionsAndUniqueValues) {
  WorkloadConfig spec;
  spec.mtx_partitions = 3;
  spec.compare_probability = 0.5;
  const auto ranges = even_ranges(300, 3);
  const auto ops = gen_workload(spec, ranges, 300, 9, 2000);
  std::set<Value> values;
  std::map<Operation::Kind, int> kinds;
  for (const auto& op : ops) {
    ++kinds[op.kind];
    if (op.kind == Operation::Kind::kTxn) {
      EXPECT_GE(op.steps.size(), spec.min_ops);
      EXPECT_LE(op.steps.size(), spec.max_ops);
      for (const auto& s : op.steps) {
        EXPECT_TRUE(ranges[op.partition].contains(s.key));
        if (s.write) EXPECT_TRUE(values.insert(s.value).second);
      }
    } else if (op.kind == Operation::Kind::kMtx) {
      std::set<PartitionId> parts;
      for (const auto& [k, v] : op.writes) {
        parts.insert(Cluster{{}, ranges}.partition_of(k));
        EXPECT_TRUE(values.insert(v).second);
      }
      EXPECT_EQ(parts.size(), 3u);
    }
  }
  EXPECT_GT(kinds[Operation::Kind::kReadOnly], 0);
  EXPECT_GT(kinds[Operation::Kind::kTxn], kinds[Operation::Kind::kMtx]);
}

TEST(WorkloadTest, RateSchedule) {
  WorkloadConfig spec;
  spec.rate = {{0, 25}, {20000, 100}};
  EXPECT_EQ(spec.rate_at(0), 25u);
  EXPECT_EQ(spec.rate_at(19999), 25u);
  EXPECT_EQ(spec.rate_at(20000), 100u);
}

// ---- Scenario parsing ----

json base_scenario() {
  return json{{"name", "t"},
              {"seed", 1},
              {"duration", 10000},
              {"key_space", 100},
              {"partitions", 2},
              {"otms", 2},
              {"htms", 1},
              {"config", {{"elasticity", false}}},
              {"workload", {{"clients", 3}, {"rate", 300}}}};
}

TEST(ScenarioTest, ParsesDefaults) {
  const Scenario s = Scenario::from_json(base_scenario());
  EXPECT_EQ(s.partitions.size(), 2u);
  EXPECT_EQ(s.workload.clients, 3u);
  EXPECT_EQ(s.checks, std::vector<std::string>{"all"});
  EXPECT_NO_THROW(s.validate());
}

TEST(ScenarioTest, RejectsBadInput) {
  auto expect_error = [](json j) {
    EXPECT_THROW(
        {
          const Scenario s = Scenario::from_json(j);
          run_scenario(s);
        },
        ConfigError)
        << j.dump();
  };
  json j = base_scenario();
  j["bogus"] = 1;
  expect_error(j);
  j = base_scenario();
  j["network"] = {{"min_delay", 10}, {"max_delay", 1}};
  expect_error(j);
  j = base_scenario();
  j["network"] = {{"drop_probability", 1.5}};
  expect_error(j);
  j = base_scenario();
  j["otms"] = 0;
  expect_error(j);
  j = base_scenario();
  j["partitions"] = 0;
  expect_error(j);
  j = base_scenario();
  j["checks"] = {"no_such_checker"};
  expect_error(j);
  j = base_scenario();
  j["faults"] = {{{"at", 5}, {"action", "explode"}}};
  expect_error(j);
  j = base_scenario();
  j["workload"]["distribution"] = "gaussian";
  expect_error(j);
}

TEST(ScenarioTest, LoadsCommentedFiles) {
  const auto path = std::filesystem::temp_directory_path() / "estore_commented.json";
  {
    std::ofstream out(path);
    out << "// leading comment\n" << base_scenario().dump(2) << "\n";
  }
  EXPECT_EQ(Scenario::load(path.string()).name, "t");
  EXPECT_THROW(Scenario::load("/nonexistent/x.json"), ConfigError);
}

// ---- Checker fixtures ----

class TraceBuilder {
 public:
  std::uint64_t add(SimTime t, const std::string& node, EventKind kind, json payload) {
    TraceEvent e;
    e.seq = trace.size();
    e.time = t;
    e.node = *NodeId::parse(node);
    e.kind = kind;
    e.payload = std::move(payload);
    trace.append(e);
    return e.seq;
  }
  std::uint64_t local(const std::string& node, json payload) {
    return add(time++, node, EventKind::kLocal, std::move(payload));
  }
  Trace trace;
  SimTime time = 1;
};

TEST(CheckerFixtureTest, WriteSkewCycleCitesFourEvents) {
  TraceBuilder b;
  const auto r1 = b.local("otm0", {{"ev", "txn_read"}, {"p", 0}, {"txn", "T1"}, {"key", "x"},
                                   {"value", nullptr}, {"own", false}});
  const auto r2 = b.local("otm0", {{"ev", "txn_read"}, {"p", 0}, {"txn", "T2"}, {"key", "y"},
                                   {"value", nullptr}, {"own", false}});
  const auto w1 = b.local("otm0",
                          {{"ev", "txn_write"}, {"p", 0}, {"txn", "T1"}, {"key", "y"}, {"value", "1"}});
  const auto w2 = b.local("otm0",
                          {{"ev", "txn_write"}, {"p", 0}, {"txn", "T2"}, {"key", "x"}, {"value", "2"}});
  b.local("otm0", {{"ev", "txn_commit"}, {"p", 0}, {"txn", "T1"}, {"lsn", 0}, {"epoch", 1}});
  b.local("otm0", {{"ev", "txn_commit"}, {"p", 0}, {"txn", "T2"}, {"lsn", 1}, {"epoch", 1}});
  const auto v = check_serializability(b.trace, 0);
  ASSERT_EQ(v.size(), 1u);
  std::set<std::uint64_t> cited(v[0].seqs.begin(), v[0].seqs.end());
  EXPECT_EQ(cited, (std::set<std::uint64_t>{r1, r2, w1, w2}));
  EXPECT_NE(v[0].explanation.find("cycle"), std::string::npos);
}

TEST(CheckerFixtureTest, SerialHistoryPasses) {
  TraceBuilder b;
  b.local("otm0", {{"ev", "txn_read"}, {"p", 0}, {"txn", "T1"}, {"key", "x"}, {"value", nullptr}});
  b.local("otm0", {{"ev", "txn_write"}, {"p", 0}, {"txn", "T1"}, {"key", "x"}, {"value", "1"}});
  b.local("otm0", {{"ev", "txn_commit"}, {"p", 0}, {"txn", "T1"}});
  b.local("otm0", {{"ev", "locks_released"}, {"p", 0}, {"txn", "T1"}, {"keys", {"x"}}});
  b.local("otm0", {{"ev", "txn_read"}, {"p", 0}, {"txn", "T2"}, {"key", "x"}, {"value", "1"}});
  b.local("otm0", {{"ev", "txn_write"}, {"p", 0}, {"txn", "T2"}, {"key", "x"}, {"value", "2"}});
  b.local("otm0", {{"ev", "txn_commit"}, {"p", 0}, {"txn", "T2"}});
  b.local("otm0", {{"ev", "final_state"}, {"p", 0}, {"epoch", 1}, {"store", {{"x", "2"}}}});
  EXPECT_TRUE(check_serializability(b.trace).empty());
  EXPECT_TRUE(check_durability(b.trace).empty());
}

TEST(CheckerFixtureTest, EarlyLockReleaseIsFlagged) {
  TraceBuilder b;
  b.local("otm0", {{"ev", "locks_released"}, {"p", 0}, {"txn", "T1"}, {"keys", {"x"}}});
  b.local("otm0", {{"ev", "txn_commit"}, {"p", 0}, {"txn", "T1"}});
  EXPECT_EQ(check_serializability(b.trace).size(), 1u);
}

TEST(CheckerFixtureTest, LostCommitIsFlagged) {
  TraceBuilder b;
  const auto w =
      b.local("otm0", {{"ev", "txn_write"}, {"p", 0}, {"txn", "T1"}, {"key", "x"}, {"value", "1"}});
  b.local("otm0", {{"ev", "txn_commit"}, {"p", 0}, {"txn", "T1"}});
  const auto rec = b.local("otm1", {{"ev", "recover_done"}, {"p", 0}, {"epoch", 2},
                                    {"store", json::object()}});
  const auto v = check_durability(b.trace);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].seqs, (std::vector<std::uint64_t>{w, rec}));
  EXPECT_NE(v[0].explanation.find("lost"), std::string::npos);
}

TEST(CheckerFixtureTest, StaleReadIsFlagged) {
  TraceBuilder b;
  b.local("otm0", {{"ev", "txn_write"}, {"p", 0}, {"txn", "T1"}, {"key", "x"}, {"value", "1"}});
  b.local("otm0", {{"ev", "ro_read"}, {"p", 0}, {"key", "x"}, {"value", nullptr}});
  EXPECT_EQ(check_durability(b.trace).size(), 1u);
}

TEST(CheckerFixtureTest, OverlappingTenuresAreFlagged) {
  TraceBuilder b;
  b.local("otm0", {{"ev", "open"}, {"p", 0}, {"epoch", 1}});
  b.local("otm1", {{"ev", "open"}, {"p", 0}, {"epoch", 2}});
  EXPECT_EQ(check_single_ownership(b.trace).size(), 1u);

  TraceBuilder ok;
  ok.local("otm0", {{"ev", "open"}, {"p", 0}, {"epoch", 1}});
  ok.local("otm0", {{"ev", "admit"}, {"p", 0}, {"epoch", 1}});
  ok.local("otm0", {{"ev", "close"}, {"p", 0}, {"epoch", 1}, {"reason", "migrate"}});
  ok.local("otm1", {{"ev", "open"}, {"p", 0}, {"epoch", 2}});
  EXPECT_TRUE(check_single_ownership(ok.trace).empty());
}

TEST(CheckerFixtureTest, AdmitOutsideTenureAndStaleAppendAreFlagged) {
  TraceBuilder b;
  b.local("otm0", {{"ev", "admit"}, {"p", 0}, {"epoch", 1}});
  b.add(b.time++, "otm1", EventKind::kVolumeAppend, {{"volume", "vol-p0"}, {"lsn", 0}, {"epoch", 3}});
  b.add(b.time++, "otm0", EventKind::kVolumeAppend, {{"volume", "vol-p0"}, {"lsn", 1}, {"epoch", 2}});
  EXPECT_EQ(check_single_ownership(b.trace).size(), 2u);
}

TEST(CheckerFixtureTest, CommitWithoutAllYesIsFlagged) {
  TraceBuilder b;
  b.local("htm0", {{"ev", "mtx_round_start"}, {"mtx", "m1"}, {"participants", {0, 1}}});
  b.local("otm0", {{"ev", "mtx_vote"}, {"p", 0}, {"mtx", "m1"}, {"vote", "YES"},
                   {"observed", json::object()}});
  b.local("otm1", {{"ev", "mtx_vote"}, {"p", 1}, {"mtx", "m1"}, {"vote", "NO"},
                   {"observed", json::object()}});
  b.local("htm0", {{"ev", "mtx_decision"}, {"mtx", "m1"}, {"decision", "COMMIT"}});
  b.local("master0", {{"ev", "MTX_RESOLVE"}, {"mtx", "m1"}, {"decision", "ABORT"}});
  const auto v = check_mtx_atomicity(b.trace);
  EXPECT_GE(v.size(), 2u);
}

TEST(CheckerTest, UnknownCheckerNameIsConfigError) {
  EXPECT_THROW(run_checks(Trace{}, {"nope"}), ConfigError);
  EXPECT_TRUE(run_checks(Trace{}, {"all"}).empty());
}

// ---- Full runs ----

TEST(RunTest, ZeroClientsCommitNothing) {
  json j = base_scenario();
  j["workload"]["clients"] = 0;
  const RunResult r = run_scenario(Scenario::from_json(j));
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.metrics.committed, 0u);
  for (const auto& fo : r.ownership) {
    ASSERT_TRUE(fo.map_owner.has_value());
    EXPECT_EQ(fo.serving, std::vector<NodeId>{*fo.map_owner});
  }
}

TEST(RunTest, SameScenarioTwiceGivesSameMetricsAndTrace) {
  const Scenario s = Scenario::from_json(base_scenario());
  const RunResult a = run_scenario(s);
  const RunResult b = run_scenario(s);
  EXPECT_TRUE(a.metrics == b.metrics);
  EXPECT_EQ(a.trace().serialize(), b.trace().serialize());
  RunOptions other;
  other.seed = 2;
  EXPECT_NE(run_scenario(s, other).trace().digest(), a.trace().digest());
}

TEST(RunTest, TenClientsCommitAndMetricsMatchTrace) {
  json j = base_scenario();
  j["duration"] = 60000;
  j["workload"] = {{"clients", 10}, {"rate", 200}};
  const RunResult r = run_scenario(Scenario::from_json(j));
  EXPECT_TRUE(r.ok());
  std::uint64_t commit_ok = 0;
  std::uint64_t mtx_submits = 0;
  for (const auto& e : r.trace().events()) {
    if (e.kind != EventKind::kSend) continue;
    const auto type = e.payload["msg"].value("type", "");
    commit_ok += type == "CommitOk";
    mtx_submits += type == "MtxSubmit";
  }
  EXPECT_GT(r.metrics.committed, 0u);
  EXPECT_EQ(r.metrics.committed, commit_ok);
  EXPECT_GT(mtx_submits, 0u);
}

TEST(RunTest, NoMtxInMixMeansNoMtxSubmit) {
  json j = base_scenario();
  j["workload"]["mix"] = {{"read_only", 0.3}, {"txn", 0.7}, {"mtx", 0.0}};
  const RunResult r = run_scenario(Scenario::from_json(j));
  for (const auto& e : r.trace().events()) {
    if (e.kind == EventKind::kSend) {
      EXPECT_NE(e.payload["msg"].value("type", ""), "MtxSubmit");
    }
  }
}

TEST(RunTest, TraceRoundTripsThroughCheckers) {
  const RunResult r = run_scenario(Scenario::from_json(base_scenario()));
  std::stringstream io(r.trace().serialize());
  const Trace back = Trace::read(io);
  EXPECT_TRUE(run_checks(back, {"all"}).empty());
  EXPECT_TRUE(compute_metrics(back) == r.metrics);
}

TEST(CorpusTest, EveryShippedScenarioPasses) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(ESTORE_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++n;
    const RunResult r = run_scenario(Scenario::load(entry.path().string()));
    EXPECT_TRUE(r.ok()) << entry.path();
    for (const auto& v : r.violations) ADD_FAILURE() << v.str();
  }
  EXPECT_GE(n, 7u);
}

// ---- CLI ----

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ESTORE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, ExitCodes) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string scenario = std::string(ESTORE_SCENARIO_DIR) + "/no-fault.json";
  const std::string trace = (dir / "estore_cli_trace.log").string();
  EXPECT_EQ(run_cli("run --scenario " + scenario + " --until 5000 --trace-out " + trace), 0);
  EXPECT_EQ(run_cli("check --trace " + trace), 0);
  EXPECT_EQ(run_cli("check --trace " + trace + " --checks nope"), 2);
  EXPECT_EQ(run_cli("run --scenario /nonexistent.json"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);

  const std::string bad = (dir / "estore_cli_bad.log").string();
  {
    std::ofstream out(bad);
    out << "seq=0 time=1 node=otm1 kind=LOCAL payload={\"ev\":\"open\",\"p\":0,\"epoch\":2}\n"
        << "seq=1 time=2 node=otm0 kind=LOCAL payload={\"ev\":\"open\",\"p\":0,\"epoch\":1}\n";
  }
  EXPECT_EQ(run_cli("check --trace " + bad + " --checks single_ownership"), 1);
}

}  // namespace
}  // namespace estore
