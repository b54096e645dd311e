#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cpssv/scenarios.hpp"
#include "cpssv/smc.hpp"
#include "json.hpp"

using namespace cpssv;

namespace {

const std::string kModels = CPSSV_SOURCE_DIR "/models/";

struct Coin {
  ModelDocument doc = parse_model(read_file(kModels + "bernoulli.cpss"));
  Deployment dep = parse_deployment(read_file(kModels + "bernoulli.toml"));
  Network net = instantiate(doc, dep);
  MtlFormula f = parse_property(dep.property);
  BoundProperty prop = bind(f, net);
};

const Coin& coin() {
  static const Coin c;
  return c;
}

SmcConfig fixed(std::uint64_t runs, std::uint64_t seed, unsigned workers = 1) {
  SmcConfig cfg;
  cfg.runs = runs;
  cfg.seed = seed;
  cfg.workers = workers;
  return cfg;
}

}  // namespace

TEST(Estimate, TautologyHoldsOnEveryRun) {
  const BoundProperty p = bind(parse_property("G true"), coin().net);
  const SmcResult r = estimate(coin().net, p, fixed(500, 1));
  EXPECT_EQ(r.k, 500u);
  EXPECT_EQ(r.n, 500u);
  EXPECT_EQ(r.p_hat, 1.0);
  EXPECT_EQ(r.ci.hi, 1.0);
}

TEST(Estimate, ContradictionNeverHolds) {
  const BoundProperty p = bind(parse_property("F false"), coin().net);
  const SmcResult r = estimate(coin().net, p, fixed(200, 1));
  EXPECT_EQ(r.k, 0u);
  EXPECT_EQ(r.ci.lo, 0.0);
  EXPECT_TRUE(std::isnan(r.mean_sat_time));
}

TEST(Estimate, BernoulliPoint) {
  const SmcResult r = estimate(coin().net, coin().prop, fixed(10000, 3, 4));
  EXPECT_NEAR(r.p_hat, 0.3, 0.015);
  EXPECT_LE(r.ci.lo, 0.3);
  EXPECT_GE(r.ci.hi, 0.3);
  EXPECT_DOUBLE_EQ(r.mean_sat_time, 1.0);
}

TEST(Estimate, IndependentOfWorkerCount) {
  const SmcResult one = estimate(coin().net, coin().prop, fixed(3000, 11, 1));
  for (unsigned w : {2u, 3u, 8u}) {
    const SmcResult r = estimate(coin().net, coin().prop, fixed(3000, 11, w));
    EXPECT_EQ(r.k, one.k);
    EXPECT_EQ(r.mean_sat_time, one.mean_sat_time);
  }
}

TEST(Estimate, IntervalShrinksWithMoreRuns) {
  double last = 1.0;
  for (std::uint64_t n : {100u, 1000u, 10000u}) {
    const SmcResult r = estimate(coin().net, coin().prop, fixed(n, 5, 4));
    const double width = r.ci.hi - r.ci.lo;
    EXPECT_LT(width, last);
    last = width;
  }
}

TEST(Okamoto, RunCount) {
  EXPECT_EQ(okamoto_runs(0.01, 0.05), 18445u);
  EXPECT_EQ(okamoto_runs(0.05, 0.1), 600u);
  SmcConfig cfg;
  cfg.mode = SmcConfig::Mode::Okamoto;
  cfg.epsilon = 0.05;
  cfg.delta = 0.1;
  EXPECT_EQ(cfg.run_count(), 600u);
}

TEST(Okamoto, ErrorBoundHoldsAcrossRepetitions) {
  SmcConfig cfg;
  cfg.mode = SmcConfig::Mode::Okamoto;
  cfg.epsilon = 0.05;
  cfg.delta = 0.1;
  cfg.workers = 4;
  int within = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    cfg.seed = 1000 + rep;
    const SmcResult r = estimate(coin().net, coin().prop, cfg);
    if (std::fabs(r.p_hat - 0.3) <= cfg.epsilon) ++within;
  }
  EXPECT_GE(within, 90);
}

TEST(Config, Validation) {
  SmcConfig cfg;
  cfg.runs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SmcConfig{};
  cfg.confidence = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SmcConfig{};
  cfg.mode = SmcConfig::Mode::Okamoto;
  cfg.epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ClopperPearson, Bounds) {
  const Interval none = clopper_pearson(0, 10, 0.95);
  EXPECT_EQ(none.lo, 0.0);
  EXPECT_NEAR(none.hi, 1.0 - std::pow(0.025, 0.1), 1e-9);
  const Interval all = clopper_pearson(10, 10, 0.95);
  EXPECT_EQ(all.hi, 1.0);
  EXPECT_NEAR(all.lo, std::pow(0.025, 0.1), 1e-9);
  const Interval mid = clopper_pearson(50, 100, 0.95);
  EXPECT_NEAR(mid.lo, 0.3983, 1e-3);
  EXPECT_NEAR(mid.hi, 0.6017, 1e-3);
}

TEST(ClopperPearson, Coverage) {
  EXPECT_GE(coverage_selftest(0.5, 200, 1000), 0.93);
  EXPECT_GE(coverage_selftest(0.05, 200, 2000), 0.93);
}

TEST(Sweep, SinglePointMatchesEstimate) {
  SweepSpec spec;
  spec.parameter = "coins";
  spec.values = {"1"};
  spec.config = fixed(2000, 9, 2);
  const auto points = sweep(coin().doc, coin().dep, coin().f, spec);
  ASSERT_EQ(points.size(), 1u);
  const SmcResult direct = estimate(coin().net, coin().prop, spec.config);
  EXPECT_EQ(points[0].result.k, direct.k);
  EXPECT_EQ(points[0].result.n, direct.n);
}

TEST(Sweep, UnaddressableParameter) {
  SweepSpec spec;
  spec.parameter = "nonsense";
  spec.values = {"1"};
  EXPECT_THROW(sweep(coin().doc, coin().dep, coin().f, spec), SweepError);
  ModelDocument doc = coin().doc;
  Deployment dep = coin().dep;
  EXPECT_THROW(apply_parameter(doc, dep, "coin", "many"), SweepError);
  EXPECT_NO_THROW(apply_parameter(doc, dep, "coin", "3"));
  EXPECT_EQ(dep.find("coin")->count, 3);
}

TEST(Sweep, ConstantParameter) {
  const Scenario sc = gen_city(CitySpec{}, 2, 2, Protocol::Bluetooth);
  ModelDocument doc = sc.model;
  Deployment dep = sc.deployment;
  apply_parameter(doc, dep, "AVOID", "5.5");
  EXPECT_NO_THROW(instantiate(doc, dep));
}

TEST(Faults, PolicyViolationCountsAndAbortThrows) {
  const ModelDocument doc = parse_model(R"(
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
  Deployment dep;
  dep.horizon = 10;
  dep.instances.push_back(InstanceSpec{"a", 1});
  SmcConfig cfg = fixed(20, 1);
  const SmcResult r = estimate(doc, dep, parse_property("G true"), cfg);
  EXPECT_EQ(r.faults, 20u);
  EXPECT_EQ(r.k, 0u);
  EXPECT_FALSE(r.first_fault.empty());
  cfg.fault_policy = FaultPolicy::Abort;
  EXPECT_THROW(estimate(doc, dep, parse_property("G true"), cfg), SmcAborted);
}

TEST(Report, CsvAndJsonLayout) {
  SweepPoint p;
  p.value = "4";
  p.result.k = 3;
  p.result.n = 10;
  p.result.p_hat = 0.3;
  p.result.ci = clopper_pearson(3, 10, 0.95);
  p.result.mean_sat_time = std::nan("");
  p.result.wall_ms = 12.5;
  std::ostringstream csv;
  write_csv(csv, {p}, ReportOptions{true});
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "param,k,N,p_hat,ci_lo,ci_hi,mean_sat_time,wall_ms");
  EXPECT_EQ(text.substr(text.find('\n') + 1), "4,3,10,0.300000,0.066740,0.652453,,0\n");

  std::ostringstream js;
  SmcConfig cfg = fixed(10, 42);
  write_json(js, {p}, "F x", cfg);
  const auto doc = nlohmann::json::parse(js.str());
  EXPECT_EQ(doc["property"], "F x");
  EXPECT_EQ(doc["seed"], 42);
  ASSERT_EQ(doc["results"].size(), 1u);
  EXPECT_EQ(doc["results"][0]["k"], 3);
  EXPECT_TRUE(doc["results"][0]["mean_sat_time"].is_null());
  EXPECT_EQ(doc["results"][0]["wall_ms"], 13.0);
}
