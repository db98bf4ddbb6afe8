#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "sbsynth/abstract_set.hpp"
#include "sbsynth/box.hpp"
#include "sbsynth/geometry.hpp"
#include "sbsynth/grid.hpp"
#include "sbsynth/model.hpp"
#include "sbsynth/transition_system.hpp"

namespace sbsynth {

struct AbstractionOptions {
  /// Worker threads; 0 picks the hardware concurrency. The result does not
  /// depend on this value.
  unsigned threads = 0;
};

namespace detail {

// Outward (or, with a negative sign, inward) padding covering the rounding of
// one addition of magnitude-|x| operands.
inline double round_pad(double x) { return 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)); }

inline double wrap_coordinate(double x, double lo, double span) {
  double r = std::fmod(x - lo, span);
  if (r < 0.0) r += span;
  if (r >= span) r = 0.0;
  return lo + r;
}

inline void push_range(std::pair<std::size_t, std::size_t> r, std::vector<std::size_t>& out) {
  for (std::size_t k = r.first; k <= r.second && r.first <= r.second; ++k) out.push_back(k);
}

inline void sort_unique(std::vector<std::size_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Cells in dimension i whose closed extent meets [a, b]. In periodic
// dimensions the interval is wrapped; lo and hi are the same point there.
inline void closed_indices(const Grid& g, std::size_t i, double a, double b, std::vector<std::size_t>& out) {
  out.clear();
  const std::size_t n = g.cells_per_dim()[i];
  const double lo = g.region().lo[i];
  const double hi = g.region().hi[i];
  if (!g.periodic()[i]) {
    push_range(g.closed_range(i, a, b), out);
    return;
  }
  const double span = hi - lo;
  if (b - a >= span) {
    push_range({0, n - 1}, out);
    return;
  }
  const double a1 = wrap_coordinate(a, lo, span);
  const double b1 = a1 + (b - a);
  push_range(g.closed_range(i, a1, std::min(b1, hi)), out);
  if (b1 > hi) push_range(g.closed_range(i, lo, b1 - span), out);
  if (b1 >= hi) out.push_back(0);
  if (a1 <= lo) out.push_back(n - 1);
  sort_unique(out);
}

// Cells in dimension i overlapping (a, b) with positive length.
inline void open_indices(const Grid& g, std::size_t i, double a, double b, std::vector<std::size_t>& out) {
  out.clear();
  const std::size_t n = g.cells_per_dim()[i];
  const double lo = g.region().lo[i];
  const double hi = g.region().hi[i];
  if (!g.periodic()[i]) {
    push_range(g.open_range(i, a, b), out);
    return;
  }
  const double span = hi - lo;
  if (b - a >= span) {
    push_range({0, n - 1}, out);
    return;
  }
  const double a1 = wrap_coordinate(a, lo, span);
  const double b1 = a1 + (b - a);
  push_range(g.open_range(i, a1, std::min(b1, hi)), out);
  if (b1 > hi) push_range(g.open_range(i, lo, b1 - span), out);
  sort_unique(out);
}

// Calls f(cell) for each element of the Cartesian product of per-dimension
// index lists (none if any list is empty).
template <class F>
void for_each_product(const Grid& g, const std::vector<std::vector<std::size_t>>& idx, std::vector<std::size_t>& k,
                      F&& f) {
  const std::size_t n = idx.size();
  for (const auto& v : idx) {
    if (v.empty()) return;
  }
  std::vector<std::size_t> pos(n, 0);
  k.resize(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) k[i] = idx[i][pos[i]];
    f(g.index_of(k));
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++pos[i] < idx[i].size()) break;
      pos[i] = 0;
      if (i == 0) return;
    }
  }
}

struct RowScratch {
  std::vector<std::vector<std::size_t>> idx;
  std::vector<std::size_t> coords;
};

// F̄(c, u) and F̲(c, u) for a working cell c; rows come back sorted.
inline void abstract_pair(const SystemModel& m, const Grid& g, CellId c, std::size_t u, RowScratch& scratch,
                          std::vector<CellId>& over, std::vector<CellId>& under) {
  over.clear();
  under.clear();
  const std::size_t n = g.dim();
  const Box phi = reach_box(m.reach, g.cell_box(c), u);
  Box s1 = minkowski_sum(m.noise_over, phi);
  Box s2 = minkowski_diff_negated(m.noise_under, phi);
  for (std::size_t i = 0; i < n; ++i) {
    s1.lo[i] -= round_pad(s1.lo[i]);
    s1.hi[i] += round_pad(s1.hi[i]);
    s2.lo[i] += round_pad(s2.lo[i]);
    s2.hi[i] -= round_pad(s2.hi[i]);
  }
  const Box& region = g.region();
  scratch.idx.resize(n);

  bool over_sink = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!g.periodic()[i] && (s1.lo[i] < region.lo[i] || s1.hi[i] > region.hi[i])) over_sink = true;
    closed_indices(g, i, s1.lo[i], s1.hi[i], scratch.idx[i]);
  }
  for_each_product(g, scratch.idx, scratch.coords, [&](CellId t) {
    if (g.is_obstacle(t)) over_sink = true;
    else over.push_back(t);
  });
  std::sort(over.begin(), over.end());
  if (over_sink) over.push_back(g.sink());

  bool positive = true;
  for (std::size_t i = 0; i < n; ++i) positive = positive && s2.hi[i] > s2.lo[i];
  if (!positive) return;
  bool under_sink = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!g.periodic()[i] && (s2.lo[i] < region.lo[i] || s2.hi[i] > region.hi[i])) under_sink = true;
    open_indices(g, i, s2.lo[i], s2.hi[i], scratch.idx[i]);
  }
  for_each_product(g, scratch.idx, scratch.coords, [&](CellId t) {
    if (g.is_obstacle(t)) under_sink = true;
    else under.push_back(t);
  });
  std::sort(under.begin(), under.end());
  if (under_sink) under.push_back(g.sink());
}

struct RowBlock {
  std::vector<std::size_t> over_len, under_len;
  std::vector<CellId> over, under;
};

inline TransitionSystem assemble(const Grid& g, std::size_t n_inputs, std::vector<RowBlock>& blocks) {
  const std::size_t states = g.universe();
  std::vector<std::size_t> over_off{0}, under_off{0};
  std::vector<CellId> over_succ, under_succ;
  over_off.reserve(states * n_inputs + 1);
  under_off.reserve(states * n_inputs + 1);
  std::size_t total_over = 0, total_under = 0;
  for (const auto& b : blocks) {
    total_over += b.over.size();
    total_under += b.under.size();
  }
  over_succ.reserve(total_over + n_inputs);
  under_succ.reserve(total_under + n_inputs);
  for (auto& b : blocks) {
    for (std::size_t len : b.over_len) over_off.push_back(over_off.back() + len);
    for (std::size_t len : b.under_len) under_off.push_back(under_off.back() + len);
    over_succ.insert(over_succ.end(), b.over.begin(), b.over.end());
    under_succ.insert(under_succ.end(), b.under.begin(), b.under.end());
    b = RowBlock{};
  }
  for (std::size_t u = 0; u < n_inputs; ++u) {
    over_succ.push_back(g.sink());
    under_succ.push_back(g.sink());
    over_off.push_back(over_off.back() + 1);
    under_off.push_back(under_off.back() + 1);
  }
  return TransitionSystem::from_rows(states, n_inputs, std::move(over_off), std::move(over_succ),
                                     std::move(under_off), std::move(under_succ), g.sink());
}

}  // namespace detail

/// Finite abstraction of a sampled-time system on a grid: states are the grid
/// cells plus the sink, inputs are the model's input indices. Obstacle cells
/// and the sink map to the sink only.
inline TransitionSystem build_abstraction(const SystemModel& m, const Grid& g, AbstractionOptions opts = {}) {
  m.validate();
  if (m.dim != g.dim()) throw std::invalid_argument("build_abstraction: model and grid dimensions differ");
  const std::size_t cells = g.cell_count();
  const std::size_t n_inputs = m.input_count();
  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t chunk_cells = 2048;
  const std::size_t n_chunks = (cells + chunk_cells - 1) / chunk_cells;
  std::vector<detail::RowBlock> blocks(n_chunks);

  auto run_chunk = [&](std::size_t k) {
    detail::RowScratch scratch;
    std::vector<CellId> over, under;
    auto& b = blocks[k];
    const std::size_t c0 = k * chunk_cells;
    const std::size_t c1 = std::min(cells, c0 + chunk_cells);
    for (std::size_t c = c0; c < c1; ++c) {
      for (std::size_t u = 0; u < n_inputs; ++u) {
        if (g.is_obstacle(static_cast<CellId>(c))) {
          over.assign(1, g.sink());
          under.assign(1, g.sink());
        } else {
          detail::abstract_pair(m, g, static_cast<CellId>(c), u, scratch, over, under);
        }
        b.over_len.push_back(over.size());
        b.under_len.push_back(under.size());
        b.over.insert(b.over.end(), over.begin(), over.end());
        b.under.insert(b.under.end(), under.begin(), under.end());
      }
    }
  };

  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, n_chunks)));
  if (threads <= 1) {
    for (std::size_t k = 0; k < n_chunks; ++k) run_chunk(k);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t k = t; k < n_chunks; k += threads) run_chunk(k);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return detail::assemble(g, n_inputs, blocks);
}

/// Abstraction of one of the one-dimensional chains, computed from the kernel
/// in closed form. The grid must be [0, 2] with 1 as a cell boundary. There is
/// a single input.
inline TransitionSystem build_abstraction(const FiniteCMP& chain, const Grid& g, AbstractionOptions = {}) {
  if (g.dim() != 1 || g.region().lo[0] != 0.0 || g.region().hi[0] != 2.0 || g.periodic()[0]) {
    throw std::invalid_argument("build_abstraction: chain grids must be the non-periodic interval [0, 2]");
  }
  if (!g.obstacle_cells().empty()) throw std::invalid_argument("build_abstraction: chain grids take no obstacles");
  const std::size_t n = g.cell_count();
  std::size_t split = n;
  for (std::size_t k = 0; k <= n; ++k) {
    if (g.boundary(0, k) == 1.0) split = k;
  }
  if (split == n) throw std::invalid_argument("build_abstraction: 1 must be a cell boundary of the chain grid");

  std::vector<std::vector<CellId>> over(n + 1), under(n + 1);
  std::vector<CellId> jump;
  for (std::size_t k = split; k < n; ++k) jump.push_back(static_cast<CellId>(k));

  for (std::size_t k = 0; k < n; ++k) {
    auto& o = over[k];
    auto& un = under[k];
    if (k >= split) {
      o = jump;
      un = jump;
      continue;
    }
    const double alpha = g.boundary(0, k);
    const double beta = g.boundary(0, k + 1);
    // Jump to [1, 2]: a(s) > 0 somewhere on every cell, and bounded away from
    // zero unless the quadratic branch reaches s → 0.
    o = jump;
    const bool jump_sure = chain.branch == FiniteCMP::Branch::constant || alpha > 0.0;
    if (jump_sure) un = jump;
    // Point masses: 0 from s = 0, b(s) ∈ [b(α), b(β)) from the rest (with
    // weight 1-a(s) > 0 on [0, 1)).
    const double img_lo = FiniteCMP::b(alpha);
    const double img_hi = FiniteCMP::b(beta);
    for (std::size_t t = 0; t < split; ++t) {
      const double gl = g.boundary(0, t);
      const double gh = g.boundary(0, t + 1);
      if (gl < img_hi && gh > img_lo) o.push_back(static_cast<CellId>(t));
      else if (alpha == 0.0 && t == 0) o.push_back(0);
      const double atom_inf =
          chain.branch == FiniteCMP::Branch::constant ? 0.5 : std::min(alpha == 0.0 ? 0.5 : 1.0, 1.0 - beta * beta);
      if (atom_inf > 0.0 && gl <= img_lo && img_hi <= gh) un.push_back(static_cast<CellId>(t));
    }
    std::sort(o.begin(), o.end());
    std::sort(un.begin(), un.end());
  }
  over[n] = {static_cast<CellId>(n)};
  under[n] = {static_cast<CellId>(n)};
  return TransitionSystem(n + 1, 1, over, under, static_cast<CellId>(n));
}

inline TransitionSystem build_abstraction(const System& sys, const Grid& g, AbstractionOptions opts = {}) {
  return std::visit([&](const auto& m) { return build_abstraction(m, g, opts); }, sys);
}

// ---------------------------------------------------------------------------
// Positivity audit of the under-approximating relation.

struct FuAuditEdge {
  CellId cell = 0;
  std::size_t input = 0;
  CellId successor = 0;
  double min_mass = 0.0;
};

struct FuAuditReport {
  std::vector<FuAuditEdge> edges;
  std::size_t flagged = 0;
  /// Smallest sampled mass over all audited edges.
  double min_mass = 1.0;
};

namespace detail {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// P(w ∈ [a, b]) for one noise coordinate supported on [lo, hi]. The
// truncated Gaussian is centred with standard deviation (hi - lo) / 4.
inline double noise_mass_1d(NoiseKind kind, double lo, double hi, double a, double b) {
  a = std::max(a, lo);
  b = std::min(b, hi);
  if (!(b > a)) return 0.0;
  if (kind == NoiseKind::uniform) return (b - a) / (hi - lo);
  const double mu = 0.5 * (lo + hi);
  const double sigma = 0.25 * (hi - lo);
  const double z = normal_cdf((hi - mu) / sigma) - normal_cdf((lo - mu) / sigma);
  return (normal_cdf((b - mu) / sigma) - normal_cdf((a - mu) / sigma)) / z;
}

// P(f(s,u) + w ∈ cell) including periodic images.
inline double cell_mass(const SystemModel& m, const Grid& g, std::span<const double> y, CellId cell) {
  const Box b = g.cell_box(cell);
  double p = 1.0;
  for (std::size_t i = 0; i < g.dim() && p > 0.0; ++i) {
    const double lo = m.noise_support.lo[i];
    const double hi = m.noise_support.hi[i];
    double pi = 0.0;
    if (g.periodic()[i]) {
      const double span = g.region().hi[i] - g.region().lo[i];
      for (int k = -2; k <= 2; ++k) {
        pi += noise_mass_1d(m.noise, lo, hi, b.lo[i] + k * span - y[i], b.hi[i] + k * span - y[i]);
      }
    } else {
      pi = noise_mass_1d(m.noise, lo, hi, b.lo[i] - y[i], b.hi[i] - y[i]);
    }
    p *= pi;
  }
  return p;
}

inline double sink_mass(const SystemModel& m, const Grid& g, std::span<const double> y) {
  double inside = 1.0;
  for (std::size_t i = 0; i < g.dim(); ++i) {
    if (g.periodic()[i]) continue;
    inside *= noise_mass_1d(m.noise, m.noise_support.lo[i], m.noise_support.hi[i], g.region().lo[i] - y[i],
                            g.region().hi[i] - y[i]);
  }
  double blocked = 0.0;
  g.obstacle_cells().for_each([&](CellId c) { blocked += cell_mass(m, g, y, c); });
  return std::max(0.0, 1.0 - inside + blocked);
}

}  // namespace detail

/// Samples `edge_samples` edges (cell, input, successor ∈ F̲) and, for each,
/// estimates the minimum one-step probability of the successor over `points`
/// random states of the cell's closure plus its corners. Edges whose minimum
/// is zero up to 1e-12 are flagged.
inline FuAuditReport check_fu_alternative(const System& sys, const Grid& g, const TransitionSystem& ts,
                                          std::size_t edge_samples, std::size_t points, std::uint64_t seed) {
  std::vector<std::pair<TransitionSystem::PairIndex, CellId>> all;
  for (std::size_t p = 0; p < ts.pairs(); ++p) {
    const auto q = static_cast<CellId>(p / ts.inputs());
    if (q >= g.cell_count() || g.is_obstacle(q)) continue;
    for (CellId t : ts.under(static_cast<TransitionSystem::PairIndex>(p))) {
      all.emplace_back(static_cast<TransitionSystem::PairIndex>(p), t);
    }
  }
  std::mt19937_64 rng(seed);
  if (all.size() > edge_samples) {
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(edge_samples);
    std::sort(all.begin(), all.end());
  }
  FuAuditReport report;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = g.dim();
  for (const auto& [p, t] : all) {
    const auto q = static_cast<CellId>(p / ts.inputs());
    const std::size_t u = p % ts.inputs();
    const Box cell = g.cell_box(q);
    std::vector<std::vector<double>> states;
    if (const auto* chain = std::get_if<FiniteCMP>(&sys)) {
      // The chain kernel jumps at s = 1, so stay inside the half-open cell.
      const bool top_closed = q + 1 == g.cell_count();
      states.push_back({cell.lo[0]});
      states.push_back({top_closed ? cell.hi[0] : std::nextafter(cell.hi[0], cell.lo[0])});
      for (std::size_t k = 0; k < points; ++k) states.push_back({cell.lo[0] + unit(rng) * (cell.hi[0] - cell.lo[0])});
      (void)chain;
    } else {
      for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = (corner >> i) & 1 ? cell.hi[i] : cell.lo[i];
        states.push_back(std::move(s));
      }
      for (std::size_t k = 0; k < points; ++k) {
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = cell.lo[i] + unit(rng) * (cell.hi[i] - cell.lo[i]);
        states.push_back(std::move(s));
      }
    }
    double lowest = 1.0;
    for (const auto& s : states) {
      double mass = 0.0;
      if (const auto* chain = std::get_if<FiniteCMP>(&sys)) {
        if (t != g.sink()) {
          const Box tb = g.cell_box(t);
          mass = chain->mass(s[0], tb.lo[0], tb.hi[0], t + 1 == g.cell_count());
        }
      } else {
        const auto& m = std::get<SystemModel>(sys);
        const auto y = m.step_nominal(s, u);
        mass = t == g.sink() ? detail::sink_mass(m, g, y) : detail::cell_mass(m, g, y, t);
      }
      lowest = std::min(lowest, mass);
    }
    report.edges.push_back({q, u, t, lowest});
    report.min_mass = std::min(report.min_mass, lowest);
    if (lowest <= 1e-12) ++report.flagged;
  }
  return report;
}

}  // namespace sbsynth
