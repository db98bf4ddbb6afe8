#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sbsynth/abstract_set.hpp"
#include "sbsynth/box.hpp"
#include "sbsynth/grid.hpp"
#include "sbsynth/model.hpp"
#include "sbsynth/solver.hpp"
#include "sbsynth/transition_system.hpp"

namespace sbsynth {

/// Continuous state feedback obtained by composing an abstract controller with
/// quantization. Holds references; the controller and grid must outlive it.
class RefinedController {
 public:
  RefinedController(const Controller& c, const Grid& g) : c_(&c), g_(&g) {
    if (c.universe() != g.universe()) throw std::invalid_argument("refine: controller and grid sizes differ");
  }

  /// Input for state s, or nullopt when s is outside the controller domain
  /// (including the sink).
  std::optional<std::size_t> operator()(std::span<const double> s) const {
    const CellId q = g_->quantize(s);
    if (q == g_->sink()) return std::nullopt;
    return c_->input(q);
  }

  const Grid& grid() const { return *g_; }

 private:
  const Controller* c_;
  const Grid* g_;
};

inline RefinedController refine(const Controller& c, const Grid& g) { return RefinedController(c, g); }

struct TrajectoryStep {
  std::vector<double> state;
  std::optional<std::size_t> input;  // none on the final state
  bool in_target = false;
  bool in_winning = false;
  bool hit_sink = false;
  bool no_guarantee = false;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;

  std::size_t target_visits() const {
    return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const auto& s) { return s.in_target; }));
  }
  bool hit_sink() const { return !steps.empty() && steps.back().hit_sink; }
  bool stayed_in_winning() const {
    return std::all_of(steps.begin(), steps.end(), [](const auto& s) { return s.in_winning; });
  }
  bool had_no_guarantee() const {
    return std::any_of(steps.begin(), steps.end(), [](const auto& s) { return s.no_guarantee; });
  }
};

struct SimStats {
  std::size_t trials = 0;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> target_visits;  // per trial
  double fraction_contained = 0.0;         // never left W̲ and never hit the sink
  double fraction_trapped = 0.0;           // stayed in the designated cell or set throughout
  std::size_t sink_hits = 0;
  std::size_t no_guarantee_trials = 0;
};

/// The fallback applied when the policy gives no guarantee.
inline constexpr std::size_t fallback_input = 0;

namespace detail {

template <class Rng>
double sample_noise_1d(NoiseKind kind, double lo, double hi, Rng& rng) {
  if (!(hi > lo)) return lo;
  if (kind == NoiseKind::uniform) return std::uniform_real_distribution<double>(lo, hi)(rng);
  // Centred normal with sigma a quarter of the width, conditioned on [lo, hi].
  std::normal_distribution<double> n(0.5 * (lo + hi), 0.25 * (hi - lo));
  while (true) {
    const double x = n(rng);
    if (x >= lo && x <= hi) return x;
  }
}

template <class Rng>
void add_noise(const SystemModel& m, std::span<double> s, Rng& rng) {
  for (std::size_t i = 0; i < m.dim; ++i) {
    s[i] += sample_noise_1d(m.noise, m.noise_support.lo[i], m.noise_support.hi[i], rng);
  }
}

template <class Rng>
std::vector<double> sample_in_cell(const Grid& g, CellId c, Rng& rng) {
  const Box b = g.cell_box(c);
  std::vector<double> s(g.dim());
  for (std::size_t i = 0; i < g.dim(); ++i) {
    s[i] = std::uniform_real_distribution<double>(b.lo[i], b.hi[i])(rng);
  }
  return s;
}

inline TrajectoryStep make_step(const Grid& g, const Box& target, const AbstractSet& winning, std::vector<double> s) {
  TrajectoryStep st;
  const CellId q = g.quantize(s);
  st.hit_sink = q == g.sink();
  st.in_winning = !st.hit_sink && winning.contains(q);
  st.in_target = !st.hit_sink && target.contains(s);
  st.state = std::move(s);
  return st;
}

}  // namespace detail

/// Closed-loop run s(k+1) = f(s(k), u(k)) + w(k) for `horizon` steps from s0,
/// with i.i.d. noise of the model's kind on its support. Periodic coordinates
/// are wrapped. Stops early on reaching the sink. Where the policy has no
/// input the step is marked and the fallback input is used.
inline Trajectory simulate(const SystemModel& m, const RefinedController& policy, const Box& target,
                           const AbstractSet& winning, std::span<const double> s0, std::size_t horizon,
                           std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("simulate: horizon must be at least 1");
  const Grid& g = policy.grid();
  if (s0.size() != m.dim || g.dim() != m.dim) throw std::invalid_argument("simulate: dimension mismatch");
  std::mt19937_64 rng(seed);
  Trajectory tr;
  tr.steps.reserve(horizon + 1);
  std::vector<double> s(s0.begin(), s0.end());
  g.wrap(s);
  tr.steps.push_back(detail::make_step(g, target, winning, s));
  for (std::size_t k = 0; k < horizon && !tr.steps.back().hit_sink; ++k) {
    auto& cur = tr.steps.back();
    const auto u = policy(cur.state);
    cur.no_guarantee = !u.has_value();
    cur.input = u.value_or(fallback_input);
    std::vector<double> next(m.dim);
    m.nominal(cur.state, *cur.input, next);
    detail::add_noise(m, next, rng);
    g.wrap(next);
    tr.steps.push_back(detail::make_step(g, target, winning, std::move(next)));
  }
  return tr;
}

/// Runs `trials` closed-loop trajectories from states drawn uniformly over the
/// cells of `winning`. Trial i uses seed + i for both its start and its noise.
/// Trajectories are appended to `keep` when given.
inline SimStats simulate_trials(const SystemModel& m, const RefinedController& policy, const Box& target,
                                const AbstractSet& winning, std::size_t trials, std::size_t horizon,
                                std::uint64_t seed, std::vector<Trajectory>* keep = nullptr) {
  const Grid& g = policy.grid();
  SimStats st;
  st.trials = trials;
  st.horizon = horizon;
  st.seed = seed;
  if (trials == 0) return st;
  std::vector<CellId> cells;
  winning.for_each([&](CellId c) {
    if (c < g.cell_count()) cells.push_back(c);
  });
  if (cells.empty()) throw std::invalid_argument("simulate: the winning region has no cells to start from");
  std::size_t contained = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    std::mt19937_64 start_rng(seed + i);
    const CellId c = cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(start_rng)];
    const auto s0 = detail::sample_in_cell(g, c, start_rng);
    Trajectory tr = simulate(m, policy, target, winning, s0, horizon, seed + i);
    st.target_visits.push_back(tr.target_visits());
    if (tr.hit_sink()) ++st.sink_hits;
    if (tr.had_no_guarantee()) ++st.no_guarantee_trials;
    if (tr.stayed_in_winning()) ++contained;
    if (keep) keep->push_back(std::move(tr));
  }
  st.fraction_contained = static_cast<double>(contained) / static_cast<double>(trials);
  return st;
}

/// Exact sampling of a chain from s0; the trapped fraction counts trials whose
/// states all stay in [0, 1) up to the horizon.
inline SimStats simulate_chain(const FiniteCMP& c, double s0, std::size_t horizon, std::size_t trials,
                               std::uint64_t seed) {
  if (!(s0 >= 0.0 && s0 <= 2.0)) throw std::invalid_argument("simulate_chain: s0 must lie in [0, 2]");
  SimStats st;
  st.trials = trials;
  st.horizon = horizon;
  st.seed = seed;
  std::size_t trapped = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    std::mt19937_64 rng(seed + i);
    double s = s0;
    std::size_t visits = 0;
    bool inside = s < 1.0;
    for (std::size_t k = 0; k < horizon && inside; ++k) {
      s = c.sample_next(s, rng);
      inside = s < 1.0;
      visits += inside;
    }
    st.target_visits.push_back(visits + (s0 < 1.0));
    trapped += inside;
  }
  if (trials) st.fraction_trapped = static_cast<double>(trapped) / static_cast<double>(trials);
  return st;
}

/// Repeatedly applies input u from uniform starts in `cell` and reports the
/// fraction of trials that never leave it within the horizon. Requires F̲(cell, u)
/// to contain some other state, so that escape has positive probability.
inline SimStats escape_test(const System& sys, const Grid& g, const TransitionSystem& ts, CellId cell,
                            std::size_t u, std::size_t trials, std::size_t horizon, std::uint64_t seed) {
  if (cell >= g.cell_count() || u >= ts.inputs()) throw std::invalid_argument("escape_test: cell or input out of range");
  const auto under = ts.under(cell, u);
  if (std::none_of(under.begin(), under.end(), [&](CellId t) { return t != cell; })) {
    throw std::invalid_argument("escape_test: the under-approximation of cell " + std::to_string(cell) +
                                " has no successor other than itself; the test does not apply");
  }
  SimStats st;
  st.trials = trials;
  st.horizon = horizon;
  st.seed = seed;
  std::size_t trapped = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    std::mt19937_64 rng(seed + i);
    std::vector<double> s = detail::sample_in_cell(g, cell, rng);
    bool inside = true;
    for (std::size_t k = 0; k < horizon && inside; ++k) {
      if (const auto* chain = std::get_if<FiniteCMP>(&sys)) {
        s[0] = chain->sample_next(s[0], rng);
      } else {
        const auto& m = std::get<SystemModel>(sys);
        std::vector<double> next(m.dim);
        m.nominal(s, u, next);
        detail::add_noise(m, next, rng);
        g.wrap(next);
        s = std::move(next);
      }
      inside = g.quantize(s) == cell;
    }
    trapped += inside;
  }
  if (trials) st.fraction_trapped = static_cast<double>(trapped) / static_cast<double>(trials);
  return st;
}

}  // namespace sbsynth
