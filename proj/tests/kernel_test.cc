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

#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "estore/kernel/simulator.h"

namespace estore {
namespace {

// Appends "<payload>@<time>" for timers and "msg:<body>" for deliveries.
class Recorder : public Node {
 public:
  Recorder(Simulator& sim, NodeId self, std::vector<std::string>* log)
      : sim_(sim), self_(self), log_(log) {}

  void on_message(const NodeId& /*from*/, const json& msg) override {
    log_->push_back("msg:" + msg.dump());
  }
  void on_timer(const json& payload) override {
    const auto name = payload.get<std::string>();
    log_->push_back(name + "@" + std::to_string(sim_.now()));
    if (name == "a") sim_.schedule(self_, 0, "c");
    if (name == "boom") throw std::runtime_error("boom");
  }

 private:
  Simulator& sim_;
  NodeId self_;
  std::vector<std::string>* log_;
};

NodeFactory recorder(std::vector<std::string>* log) {
  return [log](Simulator& sim, NodeId id) { return std::make_unique<Recorder>(sim, id, log); };
}

NetworkConfig net(double drop = 0.0) {
  NetworkConfig n;
  n.min_delay = 1;
  n.max_delay = 10;
  n.drop_probability = drop;
  return n;
}

std::size_t count_kind(const Trace& t, EventKind kind) {
  std::size_t n = 0;
  for (const auto& e : t.events()) n += e.kind == kind;
  return n;
}

TEST(SimulatorTest, ZeroDelayRunsAfterAlreadyRunnableEvents) {
  std::vector<std::string> log;
  Simulator sim(1, net());
  const NodeId n = sim.add_node(Role::kOtm, recorder(&log));
  sim.run_until(0);
  sim.schedule(n, 5, "a");
  sim.schedule(n, 5, "b");
  sim.run_until(100);
  EXPECT_EQ(log, (std::vector<std::string>{"a@5", "b@5", "c@5"}));
}

TEST(SimulatorTest, DelayIsRelativeToNow) {
  std::vector<std::string> log;
  Simulator sim(1, net());
  const NodeId n = sim.add_node(Role::kOtm, recorder(&log));
  sim.run_until(5);
  sim.schedule(n, 10, "x");
  sim.run_until(100);
  EXPECT_EQ(log, (std::vector<std::string>{"x@15"}));
}

TEST(SimulatorTest, CrashDiscardsPendingTimers) {
  std::vector<std::string> log;
  Simulator sim(1, net());
  const NodeId n = sim.add_node(Role::kOtm, recorder(&log));
  sim.run_until(0);
  sim.schedule(n, 10, "x");
  sim.crash_node(n);
  sim.restart_node(n);
  sim.run_until(100);
  EXPECT_TRUE(log.empty());
  EXPECT_EQ(count_kind(sim.trace(), EventKind::kCrash), 1u);
  EXPECT_EQ(count_kind(sim.trace(), EventKind::kRestart), 1u);
}

TEST(SimulatorTest, DownNodeSchedulesNothing) {
  std::vector<std::string> log;
  Simulator sim(1, net());
  const NodeId n = sim.add_node(Role::kOtm, recorder(&log));
  sim.run_until(0);
  sim.crash_node(n);
  EXPECT_EQ(sim.schedule(n, 1, "x"), 0u);
  EXPECT_FALSE(sim.alive(n));
  EXPECT_EQ(sim.instance(n), nullptr);
}

TEST(SimulatorTest, LosslessNetworkDeliversExactlyOnce) {
  std::vector<std::string> log;
  Simulator sim(3, net(0.0));
  const NodeId a = sim.add_node(Role::kOtm, recorder(&log));
  const NodeId b = sim.add_node(Role::kOtm, recorder(&log));
  sim.run_until(0);
  for (int i = 0; i < 50; ++i) sim.send(a, b, json{{"type", "Ping"}, {"i", i}});
  sim.run_until(1000);
  EXPECT_EQ(log.size(), 50u);
  EXPECT_EQ(count_kind(sim.trace(), EventKind::kDeliver), 50u);
  EXPECT_EQ(count_kind(sim.trace(), EventKind::kDrop), 0u);
  for (const auto& e : sim.trace().events()) {
    if (e.kind != EventKind::kDeliver) continue;
    EXPECT_GE(e.time, 1u);
    EXPECT_LE(e.time, 10u);
  }
}

TEST(SimulatorTest, TotalLossDropsEverything) {
  std::vector<std::string> log;
  Simulator sim(3, net(1.0));
  const NodeId a = sim.add_node(Role::kOtm, recorder(&log));
  const NodeId b = sim.add_node(Role::kOtm, recorder(&log));
  sim.run_until(0);
  for (int i = 0; i < 20; ++i) sim.send(a, b, json{{"type", "Ping"}});
  sim.run_until(1000);
  EXPECT_TRUE(log.empty());
  EXPECT_EQ(count_kind(sim.trace(), EventKind::kDrop), 20u);
}

TEST(SimulatorTest, PartitionBlocksAcrossSets) {
  std::vector<std::string> log;
  Simulator sim(3, net());
  const NodeId a = sim.add_node(Role::kOtm, recorder(&log));
  const NodeId b = sim.add_node(Role::kOtm, recorder(&log));
  const NodeId c = sim.add_node(Role::kOtm, recorder(&log));
  sim.run_until(0);
  sim.network().partition_sets = {{a}, {b}};
  sim.send(a, b, json{{"type", "X"}});
  sim.send(a, c, json{{"type", "Y"}});
  sim.run_until(100);
  ASSERT_EQ(log.size(), 1u);
  EXPECT_NE(log[0].find("\"Y\""), std::string::npos);
}

TEST(SimulatorTest, FirstAppendIsLsnZeroAndSurvivesCrash) {
  std::vector<std::string> log;
  Simulator sim(1, net());
  const NodeId a = sim.add_node(Role::kOtm, recorder(&log));
  sim.run_until(0);
  sim.create_volume("v");
  ASSERT_TRUE(sim.attach_volume("v", a, 1));
  EXPECT_EQ(sim.volume_append("v", a, "r0"), 0u);
  EXPECT_EQ(sim.volume_append("v", a, "r1"), 1u);
  sim.crash_node(a);
  EXPECT_FALSE(sim.volume_holder("v").has_value());
  sim.restart_node(a);
  sim.run_until(1);
  EXPECT_EQ(sim.volume_records("v"), (std::vector<std::string>{"r0", "r1"}));
}

TEST(SimulatorTest, SecondAttachIsRejectedUnlessNewerEpoch) {
  std::vector<std::string> log;
  Simulator sim(1, net());
  const NodeId a = sim.add_node(Role::kOtm, recorder(&log));
  const NodeId b = sim.add_node(Role::kOtm, recorder(&log));
  sim.run_until(0);
  sim.create_volume("v");
  ASSERT_TRUE(sim.attach_volume("v", a, 1));
  EXPECT_FALSE(sim.attach_volume("v", b, 1));
  EXPECT_THROW(sim.volume_append("v", b, "x"), FencingError);
  ASSERT_TRUE(sim.attach_volume("v", b, 2));
  EXPECT_THROW(sim.volume_append("v", a, "stale"), FencingError);
  EXPECT_FALSE(sim.attach_volume("v", a, 1));
  EXPECT_EQ(sim.volume_append("v", b, "y"), 0u);
}

TEST(SimulatorTest, UnknownVolumeIsConfigError) {
  Simulator sim(1, net());
  EXPECT_THROW(sim.volume_records("nope"), ConfigError);
  sim.create_volume("v");
  EXPECT_THROW(sim.create_volume("v"), ConfigError);
}

TEST(SimulatorTest, HandlerExceptionAbortsWithPanicRecord) {
  std::vector<std::string> log;
  Simulator sim(1, net());
  const NodeId a = sim.add_node(Role::kOtm, recorder(&log));
  sim.run_until(0);
  sim.schedule(a, 3, "boom");
  EXPECT_THROW(sim.run_until(10), SimulationAborted);
  ASSERT_GT(sim.trace().size(), 0u);
  EXPECT_EQ(sim.trace().events().back().ev(), "panic");
}

TEST(SimulatorTest, QuiescentRunDrains) {
  std::vector<std::string> log;
  Simulator sim(1, net());
  const NodeId a = sim.add_node(Role::kOtm, recorder(&log));
  sim.schedule(a, 7, "x");
  EXPECT_TRUE(sim.run_until_quiescent(1000));
  EXPECT_EQ(log.size(), 1u);
}

std::string lossy_run(std::uint64_t seed) {
  std::vector<std::string> log;
  Simulator sim(seed, net(0.3));
  std::vector<NodeId> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(sim.add_node(Role::kOtm, recorder(&log)));
  sim.run_until(0);
  for (int i = 0; i < 200; ++i) {
    const auto src = ids[sim.rng().uniform(0, 3)];
    const auto dst = ids[sim.rng().uniform(0, 3)];
    sim.send(src, dst, json{{"type", "M"}, {"i", i}});
    if (i == 100) sim.crash_node(ids[2]);
  }
  sim.run_until(500);
  return sim.trace().serialize();
}

TEST(SimulatorTest, SameSeedSameTrace) {
  EXPECT_EQ(lossy_run(42), lossy_run(42));
  EXPECT_NE(lossy_run(42), lossy_run(43));
}

TEST(TraceTest, LineRoundTrip) {
  std::vector<std::string> log;
  Simulator sim(9, net(0.2));
  const NodeId a = sim.add_node(Role::kOtm, recorder(&log));
  const NodeId b = sim.add_node(Role::kHtm, recorder(&log));
  sim.run_until(0);
  for (int i = 0; i < 30; ++i) sim.send(a, b, json{{"type", "T"}, {"v", "x y=z"}});
  sim.note(a, json{{"ev", "hello"}, {"k", 1}});
  sim.crash_node(b);
  sim.run_until(100);
  std::stringstream io(sim.trace().serialize());
  const Trace back = Trace::read(io);
  EXPECT_EQ(back.serialize(), sim.trace().serialize());
  EXPECT_EQ(back.digest(), sim.trace().digest());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].seq, i);
}

TEST(NodeIdTest, ParseAndPrint) {
  for (const char* s : {"otm3", "htm0", "meta0", "master0", "client12"}) {
    auto id = NodeId::parse(s);
    ASSERT_TRUE(id.has_value()) << s;
    EXPECT_EQ(id->str(), s);
  }
  EXPECT_FALSE(NodeId::parse("bogus").has_value());
}

}  // namespace
}  // namespace estore
