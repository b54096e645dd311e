#include <gtest/gtest.h>

#include <sstream>

#include "cpssv/engine.hpp"
#include "cpssv/scenarios.hpp"
#include "cpssv/weaver.hpp"

using namespace cpssv;

namespace {

Network single(const std::string& text, std::int64_t count = 1, double horizon = 1000.0) {
  const ModelDocument doc = parse_model(text);
  Deployment dep;
  dep.horizon = horizon;
  dep.instances.push_back(InstanceSpec{doc.classes.at(0).name, count});
  return instantiate(doc, dep);
}

const char* kBranch = R"(
agentclass a {
  spatial {
    initial S
    state S delay det(1)
    state A delay det(0)
    state B delay det(0)
    on S -> A prob 0.3
    on S -> B prob 0.7
    on A -> S
    on B -> S
  }
}
)";

const Network& flag_net() {
  static const Scenario sc = gen_capture_flag();
  static const Network net = instantiate(sc.model, sc.deployment);
  return net;
}

}  // namespace

TEST(InitRun, DeterministicInSeed) {
  EXPECT_TRUE(init_run(flag_net(), 5) == init_run(flag_net(), 5));
  EXPECT_FALSE(init_run(flag_net(), 5) == init_run(flag_net(), 6));
}

TEST(InitRun, DeterministicDelayIsTheDeparture) {
  const Network net = single("agentclass a { spatial { initial A state A delay det(3) on A -> A } }");
  const RunState rs = init_run(net, 1);
  EXPECT_EQ(rs.departure(0), 3.0);
  EXPECT_EQ(rs.next_time(), std::optional<double>(3.0));
}

TEST(Step, BranchFrequencies) {
  const Network net = single(kBranch, 1, 1e9);
  RunState rs = init_run(net, 77, -1.0, 300000);
  std::uint64_t to_a = 0, to_b = 0;
  while (auto e = step(rs)) {
    if (e->from != 0) continue;
    (e->to == 1 ? to_a : to_b) += 1;
  }
  EXPECT_EQ(rs.terminal(), TerminalReason::EventCap);
  const double n = static_cast<double>(to_a + to_b);
  ASSERT_GE(n, 100000.0);
  EXPECT_NEAR(to_a / n, 0.3, 0.01);
  EXPECT_NEAR(to_b / n, 0.7, 0.01);
}

TEST(Run, ZeroHorizonIsEmpty) {
  const Trace t = run(flag_net(), 3, 0.0);
  EXPECT_TRUE(t.entries.empty());
  EXPECT_EQ(t.terminal, TerminalReason::Horizon);
}

TEST(Run, StrictHorizon) {
  const Network net = single("agentclass a { spatial { initial A state A delay det(1) on A -> A } }", 1, 3.0);
  const Trace t = run(net, 1);
  ASSERT_EQ(t.entries.size(), 2u);  // t = 1, 2; the event at 3 is beyond the horizon
  EXPECT_EQ(t.entries.back().time, 2.0);
  EXPECT_EQ(t.end_time, 3.0);
}

TEST(Run, SameSeedSameTrace) {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    std::ostringstream a, b;
    write_trace_ndjson(a, run(flag_net(), seed));
    write_trace_ndjson(b, run(flag_net(), seed));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_FALSE(a.str().empty());
  }
}

TEST(Run, ExponentialSojournMean) {
  const Network net = single("agentclass a { spatial { initial A state A delay exp(2) on A -> A } }", 1, 1e9);
  const Trace t = run(net, 4, -1.0, 100000);
  ASSERT_EQ(t.entries.size(), 100000u);
  EXPECT_NEAR(t.entries.back().time / 100000.0, 0.5, 0.01);
}

TEST(Run, TimesNondecreasingAndAbsorbedInstancesStayPut) {
  const Network& net = flag_net();
  int absorbed = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Trace t = run(net, seed);
    std::vector<bool> done(net.instances.size(), false);
    double last = 0.0;
    for (const auto& e : t.entries) {
      ASSERT_GE(e.time, last);
      last = e.time;
      ASSERT_FALSE(done[e.instance]) << "seed " << seed;
      if (net.classes[0]->states[e.to].part == AgentClass::Part::Predicate) {
        done[e.instance] = true;
        ++absorbed;
      }
    }
  }
  EXPECT_GT(absorbed, 0);
}

TEST(Run, ExcursionReturnsToItsOrigin) {
  const Network& net = flag_net();
  int excursions = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Trace t = run(net, seed);
    for (const auto& e : t.entries) {
      if (e.via.empty()) continue;
      ++excursions;
      EXPECT_EQ(e.from, e.to);
      EXPECT_EQ(state_name(net, e.instance, e.via.front()), "Notify");
      EXPECT_EQ(state_name(net, e.instance, e.via.back()), "Notified");
    }
  }
  EXPECT_GT(excursions, 0);
}

TEST(Run, RobotTerminatedAfterTwoDetections) {
  const Network& net = flag_net();
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    RunState rs = init_run(net, seed);
    while (auto e = step(rs)) {
      if (state_name(net, e->instance, e->to) != "terminated") continue;
      EXPECT_GE(rs.local(e->instance, 0).i, 2);  // detected
      EXPECT_EQ(rs.local(e->instance, 2).i, -1);  // pos
      return;
    }
  }
  FAIL() << "no robot was terminated in 300 runs";
}

TEST(Run, AllAbsorbedTerminates) {
  const Network net = single(R"(
agentclass a {
  locals { int n = 0; }
  spatial {
    initial A
    state A delay det(1)
    on A -> A
  }
  predicates { success done when n >= 3 }
  hooks { on_move { n = n + 1; } }
}
)");
  const Trace t = run(net, 1);
  EXPECT_EQ(t.terminal, TerminalReason::AllAbsorbed);
  EXPECT_EQ(state_name(net, 0, t.entries.back().to), "done");
}

TEST(Run, FaultEndsTheRun) {
  const Network net = single(R"(
globals { int x[2]; }
agentclass a {
  locals { int i = 0; }
  spatial {
    initial A
    state A delay det(1)
    on A -> A do { i = i + 1; x[i] = 1; }
  }
}
)");
  const Trace t = run(net, 1);
  EXPECT_EQ(t.terminal, TerminalReason::Fault);
  EXPECT_EQ(t.entries.size(), 1u);
}

TEST(Run, DeadlockReported) {
  const Network net = single(R"(
agentclass a {
  locals { int n = 0; }
  spatial {
    initial A
    state A delay det(1)
    on A -> A guard n == 0 do { n = 1; }
  }
}
)");
  const Trace t = run(net, 1);
  EXPECT_EQ(t.terminal, TerminalReason::Deadlock);
  EXPECT_NE(t.detail.find("no enabled transition"), std::string::npos);
}
