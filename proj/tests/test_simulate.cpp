#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sbsynth/abstraction.hpp"
#include "sbsynth/simulate.hpp"
#include "sbsynth/solver.hpp"

using namespace sbsynth;

namespace {

// s' = s + shift, noise on [-d, d].
SystemModel shift_model(double shift, double d) {
  SystemModel m;
  m.name = "shift";
  m.dim = 1;
  m.inputs = {{0.0}};
  m.reach = BoxMap::interval_extension([shift](const Box& b, std::size_t) { return Box({b.lo[0] + shift}, {b.hi[0] + shift}); });
  m.nominal = [shift](std::span<const double> s, std::size_t, std::span<double> out) { out[0] = s[0] + shift; };
  m.set_noise(Box({-d}, {d}));
  return m;
}

Grid chain_grid() { return build_grid(Box({0.0}, {2.0}), {1.0}); }

}  // namespace

TEST(Refine, ComposesQuantizationWithTheController) {
  const Grid g = build_grid(Box({0.0, 0.0}, {2.0, 2.0}), {1.0, 1.0});
  Controller c(g.universe());
  c.assign(3, 2, ControlMode::safety, 1);
  const auto policy = refine(c, g);
  const double inside[] = {1.5, 1.25};
  const double uncovered[] = {0.5, 0.5};
  const double outside[] = {2.5, 0.5};
  EXPECT_EQ(policy(inside), std::optional<std::size_t>(2));
  EXPECT_FALSE(policy(uncovered));
  EXPECT_FALSE(policy(outside));
}

TEST(Simulate, ZeroNoiseIdentityIsConstant) {
  SystemModel m = shift_model(0.0, 0.0);
  const Grid g = chain_grid();
  Controller c(g.universe());
  c.assign(0, 0, ControlMode::safety, 1);
  c.assign(1, 0, ControlMode::safety, 1);
  const double s0[] = {0.3};
  const auto tr = simulate(m, refine(c, g), Box({0.0}, {1.0}), AbstractSet::full(g.universe()), s0, 25, 9);
  ASSERT_EQ(tr.steps.size(), 26u);
  for (const auto& st : tr.steps) EXPECT_EQ(st.state[0], 0.3);
  EXPECT_EQ(tr.target_visits(), 26u);
  EXPECT_FALSE(tr.steps.back().input);
}

TEST(Simulate, StopsAtTheSinkAndMarksFallbackSteps) {
  SystemModel m = shift_model(1.0, 0.0);
  const Grid g = chain_grid();
  const Controller empty(g.universe());
  const double s0[] = {0.5};
  const auto tr = simulate(m, refine(empty, g), Box({1.0}, {2.0}), AbstractSet(g.universe()), s0, 100, 1);
  ASSERT_EQ(tr.steps.size(), 3u);
  EXPECT_TRUE(tr.hit_sink());
  EXPECT_TRUE(tr.steps[0].no_guarantee);
  EXPECT_EQ(tr.steps[0].input, std::optional<std::size_t>(fallback_input));
  EXPECT_TRUE(tr.steps[1].in_target);
  EXPECT_FALSE(tr.stayed_in_winning());
}

TEST(Simulate, SeededRunsAreIdentical) {
  const SystemModel m = dubins();
  const Grid g = build_grid(Box({0, 0, -std::numbers::pi}, {2, 3, std::numbers::pi}), {0.5, 0.5, 2 * std::numbers::pi / 8},
                            {false, false, true});
  Controller c(g.universe());
  for (CellId q = 0; q < g.cell_count(); ++q) c.assign(q, q % m.input_count(), ControlMode::safety, 1);
  const double s0[] = {1.0, 1.5, 0.2};
  const Box b({0.5, 0.5, -std::numbers::pi}, {1.5, 2.5, std::numbers::pi});
  const auto a = simulate(m, refine(c, g), b, g.working_cells(), s0, 200, 42);
  const auto a2 = simulate(m, refine(c, g), b, g.working_cells(), s0, 200, 42);
  const auto other = simulate(m, refine(c, g), b, g.working_cells(), s0, 200, 43);
  ASSERT_EQ(a.steps.size(), a2.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) EXPECT_EQ(a.steps[k].state, a2.steps[k].state);
  EXPECT_NE(a.steps[1].state, other.steps[1].state);
  // The heading is wrapped into [-pi, pi).
  for (const auto& st : a.steps) {
    EXPECT_GE(st.state[2], -std::numbers::pi);
    EXPECT_LT(st.state[2], std::numbers::pi);
  }
}

TEST(Simulate, TruncatedGaussianNoiseStaysOnTheSupport) {
  std::mt19937_64 rng(3);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double x = detail::sample_noise_1d(NoiseKind::truncated_gaussian, -0.06, 0.06, rng);
    ASSERT_GE(x, -0.06);
    ASSERT_LE(x, 0.06);
    sum += x;
    sq += x * x;
  }
  // sigma = 0.03 truncated at two sigma: variance factor 1 - 4 phi(2) / (2 Phi(2) - 1).
  const double phi2 = std::exp(-2.0) / std::sqrt(2.0 * std::numbers::pi);
  const double mass = std::erf(2.0 / std::sqrt(2.0));
  const double var = 0.03 * 0.03 * (1.0 - 4.0 * phi2 / mass);
  EXPECT_NEAR(sum / n, 0.0, 4.0 * std::sqrt(var / n));
  EXPECT_NEAR(sq / n, var, 0.02 * var);
}

TEST(SimulateTrials, ZeroTrialsGiveEmptyStats) {
  const SystemModel m = shift_model(0.0, 0.1);
  const Grid g = chain_grid();
  const Controller c(g.universe());
  const auto st = simulate_trials(m, refine(c, g), Box({0.0}, {1.0}), AbstractSet(g.universe()), 0, 10, 5);
  EXPECT_EQ(st.trials, 0u);
  EXPECT_TRUE(st.target_visits.empty());
}

TEST(SimulateTrials, StartsInsideTheRegionAndCountsVisits) {
  const SystemModel m = shift_model(0.0, 0.0);
  const Grid g = build_grid(Box({0.0}, {4.0}), {1.0});
  Controller c(g.universe());
  AbstractSet w(g.universe());
  w.insert(2);
  c.assign(2, 0, ControlMode::safety, 1);
  std::vector<Trajectory> kept;
  const auto st = simulate_trials(m, refine(c, g), Box({2.0}, {3.0}), w, 20, 7, 11, &kept);
  ASSERT_EQ(kept.size(), 20u);
  for (const auto& tr : kept) {
    EXPECT_GE(tr.steps[0].state[0], 2.0);
    EXPECT_LT(tr.steps[0].state[0], 3.0);
  }
  EXPECT_EQ(st.fraction_contained, 1.0);
  for (auto v : st.target_visits) EXPECT_EQ(v, 8u);
}

TEST(SimulateChain, TrappedFractionMatchesOneMinusS0) {
  const auto c = chain("chain-ex43");
  const std::size_t n = 20000;
  for (double s0 : {0.25, 0.5}) {
    const auto st = simulate_chain(c, s0, 1000, n, 17);
    const double p = 1.0 - s0;
    EXPECT_NEAR(st.fraction_trapped, p, 3.0 * std::sqrt(p * (1 - p) / n) + 2e-3) << "s0=" << s0;
  }
}

TEST(SimulateChain, ConstantBranchEscapes) {
  const auto st = simulate_chain(chain("chain-ex52"), 0.5, 100, 20000, 4);
  EXPECT_LE(st.fraction_trapped, 0.001);
}

TEST(SimulateChain, RejectsStatesOutsideTheInterval) {
  EXPECT_THROW(simulate_chain(chain("chain-ex43"), 2.5, 10, 10, 1), std::invalid_argument);
}

TEST(EscapeTest, ConstantChainLeavesTheLowerCell) {
  const Grid g = chain_grid();
  const System sys = chain("chain-ex52");
  const auto ts = build_abstraction(sys, g);
  const auto st = escape_test(sys, g, ts, 0, 0, 5000, 50, 2);
  EXPECT_EQ(st.fraction_trapped, 0.0);
  // Horizon 3: trapped probability is at most 0.5^3 from any start.
  const auto short_run = escape_test(sys, g, ts, 0, 0, 20000, 3, 2);
  EXPECT_LE(short_run.fraction_trapped, 0.125 + 3.0 * std::sqrt(0.125 * 0.875 / 20000));
}

TEST(EscapeTest, ForcedExitNeverStays) {
  const System sys = shift_model(2.0, 0.6);
  const Grid g = build_grid(Box({0.0}, {4.0}), {1.0});
  const auto ts = build_abstraction(sys, g);
  const auto st = escape_test(sys, g, ts, 0, 0, 1000, 5, 8);
  EXPECT_EQ(st.fraction_trapped, 0.0);
}

TEST(EscapeTest, RequiresAnExternalUnderSuccessor) {
  const Grid g = chain_grid();
  const System s1 = chain("chain-ex43");
  const auto ts1 = build_abstraction(s1, g);
  EXPECT_THROW(escape_test(s1, g, ts1, 0, 0, 10, 10, 1), std::invalid_argument);
  // Identity map, noise a little wider than half the cell: S2 = [1.4, 1.6]
  // lies inside cell 1, so F̲ is that cell alone.
  const System id = shift_model(0.0, 0.6);
  const Grid coarse = build_grid(Box({0.0}, {3.0}), {1.0});
  const auto ts = build_abstraction(id, coarse);
  ASSERT_EQ(ts.under(1, 0).size(), 1u);
  EXPECT_EQ(ts.under(1, 0)[0], 1u);
  EXPECT_THROW(escape_test(id, coarse, ts, 1, 0, 10, 10, 1), std::invalid_argument);
}
