#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cpssv/distribution.hpp"
#include "cpssv/interpreter.hpp"
#include "cpssv/script.hpp"
#include "cpssv/sta.hpp"
#include "oracles.hpp"

using namespace cpssv;

namespace {

double mean_of(const StaState& s, int n, std::uint64_t key) {
  RandomStream rng(key);
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += sample_delay(s, rng);
  return sum / n;
}

Sta chain_spatial() {
  Sta s;
  s.role = StaRole::Spatial;
  for (const char* id : {"RA", "RB", "RC", "RD", "HA", "HB"}) s.states.push_back(StaState{id, Exponential{1.0}});
  s.initial = "RA";
  auto edge = [&](const char* a, const char* b) {
    StaTransition t;
    t.source = a;
    t.target = b;
    s.transitions.push_back(t);
  };
  edge("RA", "HA");
  edge("HA", "RA");
  edge("RC", "HA");
  edge("HA", "RC");
  edge("HA", "HB");
  edge("HB", "HA");
  edge("RB", "HB");
  edge("HB", "RB");
  edge("RD", "HB");
  edge("HB", "RD");
  // Unguarded moves form one group per source: split the mass evenly.
  for (auto& t : s.transitions) {
    const auto n = std::count_if(s.transitions.begin(), s.transitions.end(), [&](const StaTransition& u) { return u.source == t.source; });
    t.prob = 1.0 / static_cast<double>(n);
  }
  return s;
}

}  // namespace

// Distributions -----------------------------------------------------------------

TEST(SampleDelay, ExponentialRateOneMean) {
  StaState s{"S", Exponential{1.0}};
  EXPECT_NEAR(mean_of(s, 100000, 1), 1.0, 0.02);
}

TEST(SampleDelay, ExponentialRateTwoMean) {
  StaState s{"S", Exponential{2.0}};
  EXPECT_NEAR(mean_of(s, 100000, 2), 0.5, 0.01);
}

TEST(SampleDelay, DeterministicZero) {
  StaState s{"S", Deterministic{0.0}};
  RandomStream rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_delay(s, rng), 0.0);
}

TEST(SampleDelay, CapTruncates) {
  StaState s{"S", Exponential{0.5}, 1.5};
  RandomStream rng(4);
  for (int i = 0; i < 100000; ++i) {
    const double d = sample_delay(s, rng);
    ASSERT_GE(d, 0.0);
    ASSERT_LE(d, 1.5);
  }
}

TEST(SampleDelay, UniformWithinBounds) {
  StaState s{"S", Uniform{2.0, 3.0}};
  RandomStream rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double d = sample_delay(s, rng);
    ASSERT_GE(d, 2.0);
    ASSERT_LE(d, 3.0);
  }
}

TEST(Distribution, RejectsInadmissibleParameters) {
  EXPECT_FALSE(check_distribution(Exponential{0.0}).empty());
  EXPECT_FALSE(check_distribution(Uniform{3.0, 2.0}).empty());
  EXPECT_FALSE(check_distribution(Deterministic{-1.0}).empty());
  EXPECT_TRUE(check_distribution(Uniform{0.0, 0.0}).empty());
  EXPECT_DOUBLE_EQ(mean(Exponential{4.0}), 0.25);
}

// validate_sta ------------------------------------------------------------------

TEST(ValidateSta, SixRoomSpatialModelIsClean) {
  const ValidationReport r = validate_sta(chain_spatial());
  EXPECT_TRUE(r.ok()) << r;
}

TEST(ValidateSta, ProbabilityMassMustBeOne) {
  Sta s = chain_spatial();
  s.transitions.clear();
  StaTransition a;
  a.source = "RA";
  a.target = "HA";
  a.prob = 0.5;
  StaTransition b = a;
  b.target = "RA";
  b.prob = 0.4;
  s.transitions = {a, b};
  const ValidationReport r = validate_sta(s);
  EXPECT_TRUE(r.has_error_containing("probability mass 0.9")) << r;
}

TEST(ValidateSta, InteractionCycleRejected) {
  Sta s;
  s.role = StaRole::Interaction;
  s.states = {StaState{"E"}, StaState{"S"}, StaState{"X"}};
  s.initial = "E";
  s.entry = "E";
  s.exit = "X";
  StaTransition t;
  t.source = "E";
  t.target = "S";
  s.transitions.push_back(t);
  t.source = "S";
  t.target = "E";
  t.prob = 0.5;
  s.transitions.push_back(t);
  t.target = "X";
  s.transitions.push_back(t);
  const ValidationReport r = validate_sta(s);
  EXPECT_TRUE(r.has_error_containing("interaction not guaranteed terminating")) << r;
}

TEST(ValidateSta, UndeclaredEndpointsAndDuplicates) {
  Sta s = chain_spatial();
  StaTransition t;
  t.source = "RA";
  t.target = "RX";
  s.transitions.push_back(t);
  s.states.push_back(StaState{"RA"});
  const ValidationReport r = validate_sta(s);
  EXPECT_TRUE(r.has_error_containing("RX"));
  EXPECT_TRUE(r.has_error_containing("duplicate state"));
}

TEST(ValidateSta, UnreachableStateWarns) {
  Sta s = chain_spatial();
  s.states.push_back(StaState{"Lonely", Exponential{1.0}});
  const ValidationReport r = validate_sta(s);
  EXPECT_TRUE(r.ok());
  EXPECT_GT(r.warning_count(), 0u);
}

// Guards and actions ------------------------------------------------------------

TEST(Guard, DetectionTimeGuard) {
  VariableEnvironment env;
  env.declare_global("detected_time", ScalarType::Int, Scalar::of_int(2));
  EXPECT_TRUE(eval_guard(parse_expression("detected_time==2"), env));
}

TEST(Guard, ClosedBooleanExpression) {
  VariableEnvironment env;
  EXPECT_TRUE(eval_guard(parse_expression("true && !false"), env));
}

TEST(Guard, IndexedBySelfPosMatchesReference) {
  VariableEnvironment env;
  env.declare_global_array("camera", ScalarType::Int, {Scalar::of_int(0), Scalar::of_int(1), Scalar::of_int(0)});
  env.set_self_pos(1);
  const Expr g = parse_expression("camera[self_pos()]==1");
  oracle::RefEnv ref;
  ref.arrays["camera"] = {{ScalarType::Int, 0}, {ScalarType::Int, 1}, {ScalarType::Int, 0}};
  ref.self_pos = 1;
  EXPECT_TRUE(eval_guard(g, env));
  EXPECT_EQ(oracle::ref_eval(g, ref)->b, true);
}

TEST(Guard, OutOfBoundsIsAFault) {
  VariableEnvironment env;
  env.declare_global_array("camera", ScalarType::Int, {Scalar::of_int(0)});
  env.set_self_pos(4);
  EXPECT_THROW(eval_guard(parse_expression("camera[self_pos()]==1"), env), EvalFault);
}

TEST(Guard, Deterministic) {
  VariableEnvironment env;
  env.declare_global("x", ScalarType::Int, Scalar::of_int(7));
  const Expr g = parse_expression("x % 3 == 1 && x / 2 > 2");
  const bool first = eval_guard(g, env);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(eval_guard(g, env), first);
}

TEST(Guard, NonBooleanGuardRejected) {
  VariableEnvironment env;
  env.declare_global("x", ScalarType::Int, Scalar::of_int(7));
  EXPECT_THROW(eval_guard(parse_expression("x + 1"), env), ParseError);
}

TEST(Action, TerminationWritesPosition) {
  VariableEnvironment env;
  env.declare_global("robot_pos", ScalarType::Int, Scalar::of_int(3));
  env.apply(exec_action(parse_statements("robot_pos = -1;"), env));
  EXPECT_EQ(env.get_int("robot_pos"), -1);
}

TEST(Action, EmptyBlockEmptyDelta) {
  VariableEnvironment env;
  EXPECT_TRUE(exec_action({}, env).empty());
}

TEST(Action, CameraIncrementsDetection) {
  VariableEnvironment env;
  env.declare_global_array("camera", ScalarType::Int, {Scalar::of_int(0), Scalar::of_int(1)});
  env.declare_global("robot_pos", ScalarType::Int, Scalar::of_int(1));
  env.declare_global("detected_time", ScalarType::Int, Scalar::of_int(1));
  env.apply(exec_action(
      parse_statements("if(camera[robot_pos]==1){detected_time = detected_time + 1;}"), env));
  EXPECT_EQ(env.get_int("detected_time"), 2);
}

TEST(Action, FaultLeavesEnvironmentUntouched) {
  VariableEnvironment env;
  env.declare_global("x", ScalarType::Int, Scalar::of_int(1));
  env.declare_global("y", ScalarType::Int, Scalar::of_int(0));
  const VariableEnvironment before = env;
  EXPECT_THROW(env.apply(exec_action(parse_statements("x = 5; y = x / y;"), env)), EvalFault);
  EXPECT_TRUE(env == before);
}

TEST(Action, ReadsSeeEarlierWritesOfTheSameBlock) {
  VariableEnvironment env;
  env.declare_global("x", ScalarType::Int, Scalar::of_int(1));
  env.apply(exec_action(parse_statements("x = x + 1; x = x * 10;"), env));
  EXPECT_EQ(env.get_int("x"), 20);
}

TEST(Action, ReservedNamesRejected) {
  VariableEnvironment env;
  env.declare_global("x", ScalarType::Int, Scalar::of_int(1));
  EXPECT_THROW(exec_action(parse_statements("__origin = 1;"), env), ParseError);
}

TEST(Interpreter, RandomClosedExpressionsMatchReference) {
  VariableEnvironment env;
  int faults = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    RandomStream rng = RandomStream::derive(8, i);
    const ScalarType type = static_cast<ScalarType>(rng.below(3));
    const Expr e = oracle::random_expr(rng, 5, type);
    const auto expected = oracle::ref_eval(e, {});
    const CompiledExpr c = compile_expr(e, env.symbols());
    ASSERT_EQ(c.type(), type) << to_string(e);
    if (!expected) {
      ++faults;
      EXPECT_THROW(c.eval(env.context()), EvalFault) << to_string(e);
      continue;
    }
    const Scalar got = c.eval(env.context());
    switch (type) {
      case ScalarType::Int: EXPECT_EQ(got.i, expected->i) << to_string(e); break;
      case ScalarType::Bool: EXPECT_EQ(got.b, expected->b) << to_string(e); break;
      case ScalarType::Real:
        if (std::isnan(expected->r)) {
          EXPECT_TRUE(std::isnan(got.r));
        } else {
          EXPECT_EQ(got.r, expected->r) << to_string(e);
        }
        break;
    }
  }
  EXPECT_LT(faults, 200);
}

TEST(Script, PrintedExpressionsParseBack) {
  for (std::uint64_t i = 0; i < 300; ++i) {
    RandomStream rng = RandomStream::derive(9, i);
    const Expr e = oracle::random_expr(rng, 5, static_cast<ScalarType>(rng.below(3)));
    const Expr back = parse_expression(to_string(e));
    EXPECT_TRUE(same_expr(e, back)) << to_string(e) << " vs " << to_string(back);
  }
}
