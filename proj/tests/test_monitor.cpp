#include <gtest/gtest.h>

#include "cpssv/monitor.hpp"
#include "cpssv/scenarios.hpp"
#include "cpssv/smc.hpp"
#include "oracles.hpp"

using namespace cpssv;

namespace {

bool online(const MtlFormula& f, const oracle::Word& w) {
  Watch watch(f);
  for (std::size_t k = 0; k < w.times.size() && !watch.verdict(); ++k) watch.observe(w.times[k], w.valuation[k]);
  return watch.verdict() ? *watch.verdict() : watch.finish();
}

oracle::Word word_of(std::initializer_list<std::pair<double, bool>> points) {
  oracle::Word w;
  for (const auto& [t, p] : points) {
    w.times.push_back(t);
    w.valuation.push_back({static_cast<char>(p)});
  }
  return w;
}

}  // namespace

TEST(Mtl, AgreesWithTheRecursiveDefinition) {
  for (std::uint64_t i = 0; i < 500; ++i) {
    RandomStream rng = RandomStream::derive(501, i);
    const MtlFormula f = oracle::make_formula(oracle::random_formula(rng, 4, 3), 3);
    const oracle::Word w = oracle::random_word(rng, 1 + rng.below(12), 3);
    const auto all = eval_positions(f, w.times, w.valuation);
    for (std::size_t k = 0; k < w.times.size(); ++k) {
      ASSERT_EQ(all[k] != 0, oracle::holds(f.root, k, w.times, w.valuation)) << to_string(f) << " at " << k;
    }
    ASSERT_EQ(eval_word(f, w.times, w.valuation), all[0] != 0);
    ASSERT_EQ(online(f, w), all[0] != 0) << to_string(f);
  }
}

TEST(Mtl, DerivedOperatorLaws) {
  for (std::uint64_t i = 0; i < 300; ++i) {
    RandomStream rng = RandomStream::derive(502, i);
    const Mtl a = oracle::random_formula(rng, 2, 2);
    const double d = oracle::random_bound(rng);
    const oracle::Word w = oracle::random_word(rng, 1 + rng.below(10), 2);
    auto val = [&](const Mtl& m) { return eval_word(oracle::make_formula(m, 2), w.times, w.valuation); };
    EXPECT_EQ(val(mtl_eventually(a, d)), val(mtl_until(mtl_true(), a, d)));
    EXPECT_EQ(val(mtl_always(a, d)), val(mtl_not(mtl_eventually(mtl_not(a), d))));
    EXPECT_EQ(val(mtl_not(mtl_not(a))), val(a));
  }
}

TEST(Mtl, BoundsAreMonotone) {
  for (std::uint64_t i = 0; i < 300; ++i) {
    RandomStream rng = RandomStream::derive(503, i);
    const Mtl a = oracle::random_formula(rng, 2, 2);
    const oracle::Word w = oracle::random_word(rng, 1 + rng.below(10), 2);
    double lo = oracle::random_bound(rng), hi = oracle::random_bound(rng);
    if (lo > hi) std::swap(lo, hi);
    auto val = [&](const Mtl& m) { return eval_word(oracle::make_formula(m, 2), w.times, w.valuation); };
    if (val(mtl_eventually(a, lo))) EXPECT_TRUE(val(mtl_eventually(a, hi)));
    if (val(mtl_always(a, hi))) EXPECT_TRUE(val(mtl_always(a, lo)));
  }
}

TEST(Mtl, ConstantFormulas) {
  const oracle::Word w = word_of({{0, false}, {1, false}});
  EXPECT_TRUE(eval_word(parse_property("G true"), w.times, {{}, {}}));
  EXPECT_FALSE(eval_word(parse_property("F false"), w.times, {{}, {}}));
  Watch g(parse_property("G true"));
  EXPECT_FALSE(g.observe(0, {}).has_value());
  EXPECT_TRUE(g.finish());
}

TEST(Watch, VerdictFixedWhenTheWitnessArrives) {
  const MtlFormula f = oracle::make_formula(mtl_eventually(mtl_atom(0), 10.0), 1);
  Watch w(f);
  EXPECT_FALSE(w.observe(0, {0}).has_value());
  EXPECT_FALSE(w.observe(1.5, {0}).has_value());
  EXPECT_EQ(w.observe(3, {1}), std::optional<bool>(true));
  EXPECT_EQ(w.decided_at(), 3.0);
}

TEST(Watch, BoundExpiresWithoutAWitness) {
  const MtlFormula f = oracle::make_formula(mtl_eventually(mtl_atom(0), 10.0), 1);
  Watch w(f);
  for (double t : {0.0, 2.0, 4.0, 9.5}) EXPECT_FALSE(w.observe(t, {0}).has_value());
  EXPECT_EQ(w.expire(10.5), std::optional<bool>(false));
}

TEST(Watch, OpenObligationIsFalseAtTheEnd) {
  const MtlFormula f = oracle::make_formula(mtl_eventually(mtl_atom(0)), 1);
  Watch w(f);
  w.observe(0, {0});
  w.observe(5, {0});
  EXPECT_FALSE(w.finish());
}

TEST(Watch, OnlineVerdictEqualsOfflineOnRuns) {
  const Scenario sc = gen_capture_flag();
  const Network net = instantiate(sc.model, sc.deployment);
  for (const char* text : {kCaptureFlagProperty, "G[<=5] robotSFNum == 0", "F robot[0].HB && X robot[1].RA",
                           "(numFlag < 2) U[<=8] terminatedNum >= 1"}) {
    const BoundProperty p = bind(parse_property(text), net);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const Trace t = run(net, seed);
      const RunOutcome o = check_run(net, p, seed);
      ASSERT_EQ(o.verdict, eval(p, t)) << text << " seed " << seed;
    }
  }
}

TEST(Bind, PropertyTerms) {
  const Scenario sc = gen_capture_flag();
  const Network net = instantiate(sc.model, sc.deployment);
  const BoundProperty p = bind(parse_property("RANum == 1 && RCNum == 1 && robotSFNum == 0 && robot[1].RC && SystemTime == 0"), net);
  std::vector<char> v;
  p.valuate(init_run(net, 1).snapshot(), v);
  ASSERT_EQ(v.size(), 5u);
  for (char x : v) EXPECT_TRUE(x);
  EXPECT_THROW(bind(parse_property("F robot[7].RA"), net), ParseError);
  EXPECT_THROW(bind(parse_property("F numFlag"), net), ParseError);
}
