// Acceptance checks: one PASS/FAIL line per criterion. Exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cpssv/cli.hpp"
#include "cpssv/engine.hpp"
#include "cpssv/model.hpp"
#include "cpssv/monitor.hpp"
#include "cpssv/scenarios.hpp"
#include "cpssv/smc.hpp"
#include "cpssv/weaver.hpp"
#include "fuzz.hpp"
#include "oracles.hpp"

using namespace cpssv;

namespace {

const std::string kModels = CPSSV_SOURCE_DIR "/models/";

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string series(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt("%.3f", x);
  return s;
}

bool nondecreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[i - 1]) return false;
  }
  return true;
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1]) return false;
  }
  return true;
}

SmcConfig runs(std::uint64_t n, std::uint64_t seed) {
  SmcConfig c;
  c.runs = n;
  c.seed = seed;
  return c;
}

// 1 -------------------------------------------------------------------------
Outcome estimator() {
  const ModelDocument doc = parse_model(read_file(kModels + "bernoulli.cpss"));
  const Deployment dep = parse_deployment(read_file(kModels + "bernoulli.toml"));
  const Network net = instantiate(doc, dep);
  const BoundProperty prop = bind(parse_property(dep.property), net);
  const SmcResult one = estimate(net, prop, runs(10000, 2024));
  int covered = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const SmcResult r = estimate(net, prop, runs(10000, 1000 + rep));
    if (r.ci.lo <= 0.3 && 0.3 <= r.ci.hi) ++covered;
  }
  Outcome o;
  o.pass = std::fabs(one.p_hat - 0.3) <= 0.015 && covered >= 90;
  o.detail = "p_hat=" + fmt("%.4f", one.p_hat) + ", CI covers 0.3 in " + std::to_string(covered) + "/100";
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome weaving() {
  Outcome o;
  int good = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    RandomStream rng = RandomStream::derive(77, i);
    const oracle::Triple t = oracle::random_triple(rng);
    Hooks hooks;
    hooks.check_interaction = binary(BinaryOp::Eq, var("x"), int_lit(5));
    const AgentClass c = weave(t.spatial, t.predicates, &t.interaction, hooks, "agent", {VarDecl{"x"}});
    const std::size_t qp = t.spatial.states.size(), r = t.predicates.size(), qi = t.interaction.states.size();
    const std::size_t tp = t.spatial.transitions.size(), ti = t.interaction.transitions.size();
    bool ok = c.composed.states.size() == qp + r + qi;
    ok = ok && c.composed.transitions.size() == tp + ti + qp * (r + 2);
    ok = ok && c.composed.initial == t.spatial.initial;
    for (const auto& tr : c.composed.transitions) {
      for (const auto& p : t.predicates) ok = ok && tr.source != p.id;
    }
    ok = ok && validate_composed(c).ok();
    if (ok) {
      ++good;
    } else if (o.detail.empty()) {
      o.detail = "triple " + std::to_string(i) + " violates a law; ";
    }
  }
  o.pass = good == 100;
  o.detail += std::to_string(good) + "/100 triples satisfy the counting law, q0 and absorption";
  return o;
}

// 3 -------------------------------------------------------------------------
Outcome mtl_oracle() {
  int agree = 0;
  constexpr std::uint32_t kAtoms = 3;
  for (std::uint64_t i = 0; i < 500; ++i) {
    RandomStream rng = RandomStream::derive(31, i);
    const MtlFormula f = oracle::make_formula(oracle::random_formula(rng, 4, kAtoms), kAtoms);
    const oracle::Word w = oracle::random_word(rng, 20, kAtoms);
    const std::vector<char> got = eval_positions(f, w.times, w.valuation);
    bool ok = got.size() == w.times.size();
    for (std::size_t k = 0; ok && k < w.times.size(); ++k) {
      ok = (got[k] != 0) == oracle::holds(f.root, k, w.times, w.valuation);
    }
    Watch watch(f);
    for (std::size_t k = 0; k < w.times.size() && !watch.verdict(); ++k) watch.observe(w.times[k], w.valuation[k]);
    const bool online = watch.verdict() ? *watch.verdict() : watch.finish();
    ok = ok && online == oracle::holds(f.root, 0, w.times, w.valuation);
    if (ok) ++agree;
  }
  return {agree == 500, std::to_string(agree) + "/500 formulas agree at every position (offline and online)"};
}

// 4 -------------------------------------------------------------------------
Outcome capture_flag() {
  const Scenario sc = gen_capture_flag();
  const SmcResult r = estimate(sc.model, sc.deployment, parse_property(kCaptureFlagProperty), runs(10000, 42));
  const double mid = (0.553 + 0.652) / 2;
  Outcome o;
  o.pass = std::fabs(r.p_hat - mid) <= 0.15 && std::fabs(r.mean_sat_time - 8.0) <= 3.0;
  o.detail = "p_hat=" + fmt("%.4f", r.p_hat) + " CI [" + fmt("%.3f", r.ci.lo) + ", " + fmt("%.3f", r.ci.hi) +
             "], mean satisfaction time " + fmt("%.2f", r.mean_sat_time);
  return o;
}

// 5 -------------------------------------------------------------------------
Outcome honeybee_scalability() {
  const Scenario sc = gen_honeybee(GridSpec{}, 20);
  SweepSpec spec;
  spec.parameter = "robots";
  spec.values = {"1", "3", "9", "15", "21", "27"};
  spec.config = runs(500, 5);
  const auto pts = sweep(sc.model, sc.deployment, parse_property(kHoneybeeProperty), spec);
  std::vector<double> p;
  for (const auto& pt : pts) p.push_back(pt.result.p_hat);
  Outcome o;
  o.pass = nondecreasing(p) && p.front() <= 0.05 && p.back() >= 0.95;
  o.detail = "p_hat over robots {1,3,9,15,21,27}: " + series(p);
  return o;
}

// 6 -------------------------------------------------------------------------
Outcome honeybee_stability() {
  const GridSpec grid;
  const double horizon = 5000;
  const std::string prop = "F[SystemTime<=5000](OptimalClusterNum>=threshold)";
  std::vector<double> times;
  for (int cell : {-1, cell_near_temperature(grid, 30), cell_near_temperature(grid, 22)}) {
    Scenario sc = gen_honeybee(grid, 20, BeeStart{cell});
    sc.deployment.horizon = horizon;
    times.push_back(estimate(sc.model, sc.deployment, parse_property(prop), runs(300, 6)).mean_sat_time);
  }
  Outcome o;
  o.pass = times[0] < times[1] && times[1] < times[2];
  o.detail = "mean time to cluster: scattered " + fmt("%.0f", times[0]) + ", all at 30C " + fmt("%.0f", times[1]) +
             ", all at 22C " + fmt("%.0f", times[2]);
  return o;
}

// 7 -------------------------------------------------------------------------
Outcome uav() {
  const CitySpec base;
  const std::uint64_t seed = 7;
  auto p_hat = [&](const CitySpec& spec, int uavs, int stations, Protocol pr, std::optional<int> dist = {}) {
    const Scenario sc = gen_city(spec, uavs, stations, pr, dist);
    return estimate(sc.model, sc.deployment, parse_property(city_property(spec)), runs(1000, seed)).p_hat;
  };
  std::vector<double> by_uavs, by_stations, by_distance, bt, zb, by_area;
  for (int u : {2, 4, 6, 8}) by_uavs.push_back(p_hat(base, u, 8, Protocol::Bluetooth));
  for (int s : {1, 2, 4, 8}) by_stations.push_back(p_hat(base, 8, s, Protocol::Bluetooth));
  for (int d : {1, 2, 3, 4}) by_distance.push_back(p_hat(base, 8, 8, Protocol::Bluetooth, d));
  for (int u : {6, 7, 8}) {
    bt.push_back(p_hat(base, u, 6, Protocol::Bluetooth));
    zb.push_back(p_hat(base, u, 6, Protocol::ZigBee));
  }
  for (int a : {20, 16, 12, 8}) {
    CitySpec s = base;
    s.area = a;
    by_area.push_back(p_hat(s, 8, 8, Protocol::Bluetooth));
  }
  bool zig = true;
  for (std::size_t i = 0; i < bt.size(); ++i) zig = zig && zb[i] >= bt[i];
  Outcome o;
  o.pass = nondecreasing(by_uavs) && nondecreasing(by_stations) && nonincreasing(by_distance) && zig &&
           nondecreasing(by_area);
  o.detail = "uavs{2,4,6,8}: " + series(by_uavs) + "; stations{1,2,4,8}: " + series(by_stations) +
             "; distance{1..4}: " + series(by_distance) + "; bluetooth{6,7,8}: " + series(bt) +
             "; zigbee{6,7,8}: " + series(zb) + "; buildings{20,16,12,8}: " + series(by_area);
  return o;
}

// 8 -------------------------------------------------------------------------
Outcome determinism() {
  unsetenv("CPSSV_WORKERS");
  const std::vector<std::vector<std::string>> invocations = {
      {"check", kModels + "bernoulli.cpss", "--runs", "10000", "--seed", "11"},
      {"check", kModels + "flag.cpss", "--runs", "10000", "--seed", "42"},
      {"sweep", kModels + "honeybee.cpss", "--param", "robots=1,3,9,15,21,27", "--runs", "100", "--seed", "5"},
      {"sweep", kModels + "city.cpss", "--param", "UAVs=2,4,6,8", "--runs", "200", "--seed", "7"},
      {"sweep", kModels + "city.cpss", "--deploy", kModels + "city_near.toml", "--param", "distance=1,2,3,4", "--runs", "200", "--seed", "7"},
  };
  int identical = 0;
  std::string detail;
  for (const auto& base : invocations) {
    std::vector<std::string> outputs;
    for (const char* w : {"1", "3", "8"}) {
      auto args = base;
      args.insert(args.end(), {"--workers", w, "--reproducible"});
      std::ostringstream out, err;
      const int rc = run_cli(args, out, err);
      outputs.push_back(rc == 0 ? out.str() : "exit " + std::to_string(rc) + ": " + err.str());
    }
    const bool same = outputs[0] == outputs[1] && outputs[1] == outputs[2] && outputs[0].rfind("param,", 0) == 0;
    if (same) {
      ++identical;
    } else if (detail.empty()) {
      detail = base[0] + " " + base[1] + " differs; ";
    }
  }
  return {identical == static_cast<int>(invocations.size()),
          detail + std::to_string(identical) + "/" + std::to_string(invocations.size()) +
              " CLI invocations byte-identical over 1, 3 and 8 workers"};
}

// 9 -------------------------------------------------------------------------
std::vector<fuzz::Seed> fuzz_seeds() {
  std::vector<fuzz::Seed> seeds;
  seeds.push_back({read_file(kModels + "bernoulli.cpss"), read_file(kModels + "bernoulli.toml"), "F GoalNum == 1"});
  const Scenario flag = gen_capture_flag();
  seeds.push_back({flag.model_text, flag.deployment_text, kCaptureFlagProperty});
  GridSpec small;
  small.width = 4;
  small.height = 3;
  const Scenario bee = gen_honeybee(small, 3);
  seeds.push_back({bee.model_text, bee.deployment_text, "G[<=5] !(OptimalClusterNum >= threshold) || X robot[1].C0_0"});
  CitySpec city;
  city.buildings = 8;
  city.victims = 4;
  city.victim_zone = 3;
  city.base = 5;
  const Scenario c = gen_city(city, 2, 2, Protocol::ZigBee);
  seeds.push_back({c.model_text, c.deployment_text, city_property(city)});
  return seeds;
}

Outcome robustness() {
  const fuzz::Report rep = fuzz::campaign(fuzz_seeds(), 100000, 99);
  // Pathological nesting must end in a diagnostic, not a stack overflow.
  std::uint64_t deep_findings = 0;
  const std::string deep = "agentclass a { spatial { initial S state S delay det(1) on S -> S guard " +
                           std::string(100000, '(') + "true" + std::string(100000, ')') + " } }";
  if (fuzz::exercise_model(deep, Deployment{}, 1)) ++deep_findings;
  Outcome o;
  o.pass = rep.findings == 0 && deep_findings == 0;
  o.detail = std::to_string(rep.inputs + 1) + " inputs, " + std::to_string(rep.findings + deep_findings) + " findings";
  if (!rep.first.empty()) o.detail += " (first: " + rep.first + ")";
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "estimator correctness", 10, estimator},
      {2, "weaving structure", 5, weaving},
      {3, "MTL oracle equivalence", 10, mtl_oracle},
      {4, "capture-the-flag reproduction", 60, capture_flag},
      {5, "honeybee scalability", 300, honeybee_scalability},
      {6, "honeybee stability ordering", 300, honeybee_stability},
      {7, "UAV monotonicities", 600, uav},
      {8, "determinism across worker counts", 600, determinism},
      {9, "fuzzing robustness", 600, robustness},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = seconds_since(t0);
    const bool in_time = s < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s %d %s: %s [%.1f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), s,
                c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
