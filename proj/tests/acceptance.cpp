// Acceptance checks for the synthesis pipeline. Prints one PASS/FAIL line per
// criterion and exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sbsynth/abstraction.hpp"
#include "sbsynth/io.hpp"
#include "sbsynth/operators.hpp"
#include "sbsynth/oracle.hpp"
#include "sbsynth/simulate.hpp"
#include "sbsynth/solver.hpp"
#include "support.hpp"

using namespace sbsynth;

namespace {

constexpr double pi = std::numbers::pi;
using clk = std::chrono::steady_clock;

double seconds_since(clk::time_point t0) { return std::chrono::duration<double>(clk::now() - t0).count(); }

int failures = 0;

void verdict(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s  %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Invariants gathered while the benchmarks run.
struct InvariantLog {
  bool under_in_over_relation = true;
  bool winning_sandwich = true;
  bool warm_start_identity = true;
  bool round_trip = true;
  bool controller_valid = true;
  std::vector<std::string> notes;

  void check_relations(const std::string& what, const TransitionSystem& ts) {
    for (std::size_t p = 0; p < ts.pairs(); ++p) {
      const auto o = ts.over(static_cast<TransitionSystem::PairIndex>(p));
      const auto u = ts.under(static_cast<TransitionSystem::PairIndex>(p));
      if (!std::includes(o.begin(), o.end(), u.begin(), u.end())) {
        under_in_over_relation = false;
        notes.push_back(what + ": F̲ not inside F̄ at pair " + std::to_string(p));
        return;
      }
    }
  }
  void check_sandwich(const std::string& what, const AbstractSet& under, const AbstractSet& over) {
    if (!under.is_subset_of(over)) {
      winning_sandwich = false;
      notes.push_back(what + ": W̲ not inside W̄");
    }
  }
};

InvariantLog invariants;

struct Bench {
  double ratio = 0.0;
  std::size_t under = 0, over = 0, worst = 0;
  double seconds = 0.0;
};

Bench run_benchmark(const std::string& what, const SystemModel& m, const Grid& g, const Box& target,
                    bool check_cold_start = false, bool check_files = false) {
  const auto t0 = clk::now();
  const TransitionSystem ts = build_abstraction(m, g);
  invariants.check_relations(what, ts);
  const TargetSets tg = target_sets(g, target);
  const AbstractSet over = buchi_over(ts, tg.over).set;
  const BuchiUnderResult under = buchi_under(ts, tg.under, over);
  const AbstractSet worst = worst_case_buchi(ts, tg.under).set;
  Bench b;
  b.seconds = seconds_since(t0);
  invariants.check_sandwich(what, under.winning, over);
  if (auto err = verify_controller(ts, tg.under, under.winning, under.controller)) {
    invariants.controller_valid = false;
    invariants.notes.push_back(what + ": controller check failed: " + *err);
  }
  if (check_cold_start) {
    const BuchiUnderResult cold = buchi_under(ts, tg.under);
    if (!(cold.winning == under.winning) || !(cold.controller == under.controller)) {
      invariants.warm_start_identity = false;
      invariants.notes.push_back(what + ": warm start changed the result");
    }
  }
  if (check_files) {
    const RegionFile rf = parse_region(format_region(g, under.winning));
    const ControllerFile cf = parse_controller(format_controller(g, under.controller));
    if (!(rf.to_set(g.universe()) == under.winning) || !(cf.to_controller(g.universe()) == under.controller) ||
        !(rf.grid == GridSpec::of(g))) {
      invariants.round_trip = false;
      invariants.notes.push_back(what + ": file round trip differs");
    }
  }
  const AbstractSet cells = g.working_cells();
  b.under = (under.winning & cells).size();
  b.over = (over & cells).size();
  b.worst = (worst & cells).size();
  b.ratio = b.over ? static_cast<double>(b.under) / static_cast<double>(b.over) : 0.0;
  std::printf("      %s: |W̲|=%zu |W̄|=%zu |worst|=%zu ratio=%.4f (%.1f s)\n", what.c_str(), b.under, b.over, b.worst,
              b.ratio, b.seconds);
  return b;
}

Grid chain_grid() { return build_grid(Box({0.0}, {2.0}), {1.0}); }

AbstractSet cells_of(std::size_t universe, std::initializer_list<CellId> c) { return AbstractSet::from(universe, c); }

// ---------------------------------------------------------------------------

void oracle_equivalence() {
  const auto t0 = clk::now();
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> states(1, 8), inputs(1, 3);
  std::uniform_real_distribution<double> density(0.15, 0.6);
  std::size_t agree = 0, total = 250;
  std::string first_mismatch;
  for (std::size_t k = 0; k < total; ++k) {
    const std::size_t n = states(rng), m = inputs(rng);
    const TransitionSystem ts = testing_support::random_system(rng, n, m, true, density(rng));
    const AbstractSet target = testing_support::random_set(rng, n, 0.3);
    const AbstractSet expect = oracle_as_buchi(ts, target);
    const AbstractSet under = buchi_under(ts, target).winning;
    const AbstractSet over = buchi_over(ts, target).set;
    if (under == expect && over == expect) ++agree;
    else if (first_mismatch.empty()) first_mismatch = " first mismatch at instance " + std::to_string(k);
  }
  const double secs = seconds_since(t0);
  verdict("oracle equivalence", agree == total && secs < 60.0,
          std::to_string(agree) + "/" + std::to_string(total) + " instances agree (≤8 states, ≤3 inputs), " +
              fmt("%.2f s", secs) + first_mismatch);
}

void chain_fixtures() {
  const auto t0 = clk::now();
  const Grid g = chain_grid();
  const auto ts43 = build_abstraction(chain("chain-ex43"), g);
  const auto ts52 = build_abstraction(chain("chain-ex52"), g);
  invariants.check_relations("chain-ex43", ts43);
  invariants.check_relations("chain-ex52", ts52);
  const std::size_t U = g.universe();
  const bool fu_empty = ts43.under(0, 0).empty();
  const bool w43_empty = buchi_under(ts43, cells_of(U, {0})).winning.empty();
  const bool reach52 = as_reach(ts52, cells_of(U, {1})).set == cells_of(U, {0, 1});
  const AbstractSet worst52 = worst_case_buchi(ts52, cells_of(U, {1})).set;
  const bool worst_excludes = !worst52.contains(0);
  const double secs = seconds_since(t0);
  verdict("chain fixtures", fu_empty && w43_empty && reach52 && worst_excludes && secs < 1.0,
          std::string("quadratic branch: F̲([0,1)) ") + (fu_empty ? "= ∅" : "≠ ∅") + ", W̲ " + (w43_empty ? "= ∅" : "≠ ∅") +
              "; constant branch: a.s. reach of [1,2] " + (reach52 ? "= both cells" : "wrong") +
              ", worst case " + (worst_excludes ? "excludes [0,1)" : "contains [0,1)") + fmt(", %.3f s", secs));

  // Warm start on every target of both chains.
  for (const auto* ts : {&ts43, &ts52}) {
    for (unsigned mask = 0; mask < 8; ++mask) {
      AbstractSet t(U);
      for (CellId c = 0; c < U; ++c) {
        if (mask >> c & 1) t.insert(c);
      }
      const auto cold = buchi_under(*ts, t);
      const auto warm = buchi_under(*ts, t, buchi_over(*ts, t).set);
      if (!(cold.winning == warm.winning) || !(cold.controller == warm.controller)) invariants.warm_start_identity = false;
      invariants.check_sandwich("chain", cold.winning, buchi_over(*ts, t).set);
    }
  }
}

void chain_probabilities() {
  const auto t0 = clk::now();
  const auto c = chain("chain-ex43");
  const double half = simulate_chain(c, 0.5, 10000, 100000, 7).fraction_trapped;
  const double quarter = simulate_chain(c, 0.25, 10000, 100000, 8).fraction_trapped;
  const double secs = seconds_since(t0);
  const bool ok = half >= 0.49 && half <= 0.51 && quarter >= 0.74 && quarter <= 0.76 && secs < 120.0;
  verdict("chain trapped probability", ok,
          fmt("s0=0.5 -> %.4f (need [0.49,0.51])", half) + fmt(", s0=0.25 -> %.4f (need [0.74,0.76])", quarter) +
              fmt(", %.1f s", secs));
}

const Box vdp_region({-3.5, -6.0}, {3.5, 6.0});
const Box vdp_target({-1.2, -2.9}, {-0.9, -2.0});

void vanderpol_table() {
  const Grid g = build_grid(vdp_region, {0.02, 0.02});
  const Bench b = run_benchmark("vanderpol 0.02", vanderpol(), g, vdp_target);
  const bool ok = b.worst == 0 && b.under > 0 && b.ratio >= 0.63 && b.ratio <= 0.83;
  verdict("van der pol", ok,
          "worst case " + std::string(b.worst == 0 ? "empty" : "non-empty") + ", |W̲| = " + std::to_string(b.under) +
              fmt(", ratio %.4f (need [0.63,0.83])", b.ratio) + fmt(", %.1f s", b.seconds));
}

void dubins_table() {
  const SystemModel m = dubins();
  const Box region({0, 0, -pi}, {2, 3, pi});
  const Box obstacle({0.8, 1, -pi}, {1.2, 1.4, pi});
  const Box target({1.4, 0.1, -pi}, {1.9, 0.6, pi});
  Bench coarse, fine;
  {
    const Grid g = build_grid(region, {0.1, 0.1, 2 * pi / 63}, {false, false, true}, {obstacle});
    coarse = run_benchmark("dubins 0.1", m, g, target, true, true);
  }
  {
    const Grid g = build_grid(region, {2.0 / 29, 3.0 / 43, 2 * pi / 90}, {false, false, true}, {obstacle});
    fine = run_benchmark("dubins 0.07", m, g, target);
  }
  const bool ok = coarse.worst == 0 && fine.worst == 0 && coarse.ratio >= 0.70 && coarse.ratio <= 0.90 &&
                  fine.ratio >= coarse.ratio && coarse.seconds < 1800.0;
  verdict("dubins", ok,
          fmt("ratio %.4f at 0.1 (need [0.70,0.90])", coarse.ratio) + fmt(", %.4f at 0.07", fine.ratio) +
              (fine.ratio >= coarse.ratio ? " (non-decreasing)" : " (decreasing)") + ", worst case " +
              (coarse.worst == 0 && fine.worst == 0 ? "empty" : "non-empty") + fmt(", %.1f s at 0.1", coarse.seconds));
}

void controller_soundness() {
  // At 0.02 the under-approximation is empty, so the closed loop runs on the
  // 0.01 grid over the same region.
  const SystemModel m = vanderpol();
  const Grid g = build_grid(vdp_region, {0.01, 0.01});
  const TransitionSystem ts = build_abstraction(m, g);
  invariants.check_relations("vanderpol 0.01", ts);
  const TargetSets tg = target_sets(g, vdp_target);
  const AbstractSet over = buchi_over(ts, tg.over).set;
  const BuchiUnderResult r = buchi_under(ts, tg.under, over);
  invariants.check_sandwich("vanderpol 0.01", r.winning, over);
  if (auto err = verify_controller(ts, tg.under, r.winning, r.controller)) {
    invariants.controller_valid = false;
    invariants.notes.push_back("vanderpol 0.01: controller check failed: " + *err);
  }
  if (r.winning.empty()) {
    verdict("controller soundness", false, "W̲ is empty on the 0.01 grid; nothing to simulate");
    return;
  }
  const SimStats st = simulate_trials(m, refine(r.controller, g), vdp_target, r.winning, 100, 3000, 99);
  const std::size_t fewest = *std::min_element(st.target_visits.begin(), st.target_visits.end());
  const bool ok = st.fraction_contained == 1.0 && st.sink_hits == 0 && st.no_guarantee_trials == 0 && fewest >= 10;
  verdict("controller soundness", ok,
          "van der pol 0.01 grid, |W̲| = " + std::to_string(r.winning.size()) + ", 100 runs x 3000 steps: " +
              fmt("%.0f%% stayed in W̲", 100.0 * st.fraction_contained) + ", " + std::to_string(st.sink_hits) +
              " sink hits, fewest target visits " + std::to_string(fewest));
}

void operator_properties() {
  std::mt19937_64 rng(77);
  bool apre_in_upre = true, monotone = true;
  for (int k = 0; k < 300; ++k) {
    const std::size_t n = 1 + k % 12, m = 1 + k % 3;
    const TransitionSystem ts = testing_support::random_system(rng, n, m, false);
    AbstractSet y = testing_support::random_set(rng, n), z = testing_support::random_set(rng, n);
    const AbstractSet y2 = y | testing_support::random_set(rng, n, 0.2);
    const AbstractSet z2 = z | testing_support::random_set(rng, n, 0.2);
    if (!apre(ts, y, z).is_subset_of(upre(ts, y, z))) apre_in_upre = false;
    for (Relation rel : {Relation::over, Relation::under, Relation::difference}) {
      if (!cpre(ts, rel, y).is_subset_of(cpre(ts, rel, y2))) monotone = false;
      if (!pre(ts, rel, y).is_subset_of(pre(ts, rel, y2))) monotone = false;
    }
    if (!apre(ts, y, z).is_subset_of(apre(ts, y2, z2))) monotone = false;
    if (!upre(ts, y, z).is_subset_of(upre(ts, y2, z2))) monotone = false;
    const AbstractSet target = testing_support::random_set(rng, n, 0.3);
    invariants.check_sandwich("random", buchi_under(ts, target).winning, buchi_over(ts, target).set);
    invariants.check_relations("random", ts);
    const auto cold = buchi_under(ts, target);
    const auto warm = buchi_under(ts, target, buchi_over(ts, target).set);
    if (!(cold.winning == warm.winning) || !(cold.controller == warm.controller)) invariants.warm_start_identity = false;
  }
  if (!apre_in_upre) invariants.notes.push_back("Apre not inside Upre");
  if (!monotone) invariants.notes.push_back("operator not monotone");
  const bool ok = apre_in_upre && monotone && invariants.under_in_over_relation && invariants.winning_sandwich &&
                  invariants.warm_start_identity && invariants.round_trip && invariants.controller_valid;
  std::string detail = std::string("F̲⊆F̄ ") + (invariants.under_in_over_relation ? "ok" : "broken") + ", W̲⊆W̄ " +
                       (invariants.winning_sandwich ? "ok" : "broken") + ", Apre⊆Upre " + (apre_in_upre ? "ok" : "broken") +
                       ", monotonicity " + (monotone ? "ok" : "broken") + ", warm start " +
                       (invariants.warm_start_identity ? "identical" : "differs") + ", file round trip " +
                       (invariants.round_trip ? "exact" : "differs") +
                       ", controller check " + (invariants.controller_valid ? "ok" : "failed");
  for (const auto& n : invariants.notes) detail += "; " + n;
  verdict("invariant suite", ok, detail);
}

}  // namespace

int main() {
  oracle_equivalence();
  chain_fixtures();
  chain_probabilities();
  vanderpol_table();
  dubins_table();
  controller_soundness();
  operator_properties();
  std::printf("%d criterion(s) failed\n", failures);
  return failures ? 1 : 0;
}
