#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbsynth/abstract_set.hpp"
#include "sbsynth/grid.hpp"
#include "sbsynth/operators.hpp"
#include "sbsynth/transition_system.hpp"

namespace sbsynth {

/// How a controller input was justified when it was assigned.
enum class ControlMode : std::uint8_t {
  none,
  safety,              ///< target cell: F̄(q,u) ⊆ W̲
  sure_progress,       ///< F̄(q,u) ⊆ Z of the previous inner iteration
  almost_sure_progress ///< F̄(q,u) ⊆ Y and F̲(q,u) meets Z of the previous inner iteration
};

/// Partial map from abstract states to input indices.
///
/// Besides the input, each entry keeps the inner-iteration level at which the
/// state entered the winning region (1 for target states) and the mode of the
/// selection predicate, so the choice can be re-checked afterwards.
class Controller {
 public:
  Controller() = default;
  explicit Controller(std::size_t universe)
      : input_(universe, kNone), level_(universe, 0), mode_(universe, ControlMode::none) {}

  std::size_t universe() const { return input_.size(); }

  std::optional<std::size_t> input(CellId q) const {
    if (q >= input_.size() || input_[q] == kNone) return std::nullopt;
    return static_cast<std::size_t>(input_[q]);
  }
  std::uint32_t level(CellId q) const { return level_[q]; }
  ControlMode mode(CellId q) const { return mode_[q]; }

  void assign(CellId q, std::size_t u, ControlMode mode, std::uint32_t level) {
    input_[q] = static_cast<std::int32_t>(u);
    mode_[q] = mode;
    level_[q] = level;
  }
  void clear(CellId q) {
    input_[q] = kNone;
    mode_[q] = ControlMode::none;
    level_[q] = 0;
  }

  AbstractSet domain() const {
    AbstractSet d(universe());
    for (std::size_t q = 0; q < input_.size(); ++q) {
      if (input_[q] != kNone) d.insert(static_cast<CellId>(q));
    }
    return d;
  }

  /// Equality of the state → input map (levels and modes are bookkeeping).
  friend bool operator==(const Controller& a, const Controller& b) { return a.input_ == b.input_; }

 private:
  static constexpr std::int32_t kNone = -1;
  std::vector<std::int32_t> input_;
  std::vector<std::uint32_t> level_;
  std::vector<ControlMode> mode_;
};

struct FixpointStats {
  std::size_t outer_iterations = 0;
  std::size_t inner_iterations = 0;
};

struct BuchiUnderResult {
  AbstractSet winning;
  Controller controller;
  FixpointStats stats;
};

struct FixpointResult {
  AbstractSet set;
  FixpointStats stats;
};

namespace detail {

enum class NestedMode { as_reach, under, over, worst_case };

// Incremental evaluation of the nested fixed points νY.μZ.G(Y, Z).
//
// Within one outer iteration Y is fixed and Z only grows, so Z_{k+1} = G(Y, Z_k)
// can be computed from Z_k by re-examining only the pairs that have one of the
// states added in the previous layer as a successor. Per-pair counters track
// |F̄(p) ∖ Y|, |F̲(p) ∖ Y|, |F̄(p) ∖ Z| and whether F̲(p) (resp. F̄(p)) meets Z.
// Each layer equals the literal iterate, so controller choices made at entry
// coincide with the set-based transcription of the algorithm.
class NestedFixpoint {
 public:
  NestedFixpoint(const TransitionSystem& ts, NestedMode mode, const AbstractSet& target)
      : ts_(ts), mode_(mode), target_(target) {
    if (target.universe() != ts.states()) throw std::invalid_argument("fixpoint: target set universe mismatch");
  }

  AbstractSet run(AbstractSet y, Controller* controller, FixpointStats& stats) {
    const std::size_t np = ts_.pairs();
    const std::size_t nu = ts_.inputs();
    out_y_.assign(np, 0);
    out_z_.assign(np, 0);
    hit_z_.assign(np, 0);
    touched_mark_.assign(np, 0);
    while (true) {
      ++stats.outer_iterations;
      if (controller) *controller = Controller(ts_.states());

      // Y-dependent counters and the Z-independent part of G.
      const bool over_mode = mode_ == NestedMode::over;
      for (std::size_t p = 0; p < np; ++p) {
        const auto pi = static_cast<TransitionSystem::PairIndex>(p);
        std::uint32_t n = 0;
        for (CellId c : over_mode ? ts_.under(pi) : ts_.over(pi)) n += y.contains(c) ? 0U : 1U;
        out_y_[p] = n;
        out_z_[p] = static_cast<std::uint32_t>(ts_.over(pi).size());
        hit_z_[p] = 0;
      }
      AbstractSet z(ts_.states());
      std::vector<CellId> layer;
      for (CellId q = 0; q < ts_.states(); ++q) {
        if (base_qualifies(q, y)) layer.push_back(q);
      }

      std::uint32_t level = 0;
      while (true) {
        ++stats.inner_iterations;
        if (layer.empty()) break;
        ++level;
        if (controller) {
          for (CellId q : layer) {
            if (mode_ == NestedMode::under && !target_.contains(q)) choose(q, level, *controller);
          }
        }
        for (CellId q : layer) z.insert(q);

        // Apply the new layer to the Z counters, then re-evaluate touched pairs.
        touched_.clear();
        for (CellId t : layer) {
          for (auto p : ts_.predecessors(Relation::over, t)) {
            --out_z_[p];
            hit_z_[p] |= kHitOver;
            touch(p);
          }
          for (auto p : ts_.predecessors(Relation::under, t)) {
            hit_z_[p] |= kHitUnder;
            touch(p);
          }
        }
        std::vector<CellId> next;
        for (auto p : touched_) {
          touched_mark_[p] = 0;
          const auto q = static_cast<CellId>(p / nu);
          if (z.contains(q) || excluded_from_step(q)) continue;
          if (pair_qualifies(p)) {
            z.insert(q);  // provisional mark to avoid duplicates; removed below
            next.push_back(q);
          }
        }
        for (CellId q : next) z.erase(q);
        layer = std::move(next);
      }

      if (z == y) break;
      y = std::move(z);
    }
    return y;
  }

 private:
  static constexpr std::uint8_t kHitOver = 1;
  static constexpr std::uint8_t kHitUnder = 2;

  void touch(std::size_t p) {
    if (!touched_mark_[p]) {
      touched_mark_[p] = 1;
      touched_.push_back(static_cast<TransitionSystem::PairIndex>(p));
    }
  }

  // States handled exclusively by the Z-independent part of G.
  bool excluded_from_step(CellId q) const { return target_.contains(q); }

  bool base_qualifies(CellId q, const AbstractSet& y) const {
    if (!target_.contains(q)) return false;
    switch (mode_) {
      case NestedMode::as_reach:
        return true;
      case NestedMode::under:
      case NestedMode::worst_case:
        for (std::size_t u = 0; u < ts_.inputs(); ++u) {
          if (out_y_[ts_.pair(q, u)] == 0) return true;  // Cpre_F̄(Y)
        }
        return false;
      case NestedMode::over:
        for (std::size_t u = 0; u < ts_.inputs(); ++u) {
          const auto p = ts_.pair(q, u);
          if (out_y_[p] == 0) return true;  // Cpre_F̲(Y)
          if (detail::difference_meets(ts_.over(p), ts_.under(p), y)) return true;  // Pre_{F̄∖F̲}(Y)
        }
        return false;
    }
    return false;
  }

  bool pair_qualifies(std::size_t p) const {
    switch (mode_) {
      case NestedMode::as_reach:
      case NestedMode::under:
        return (out_y_[p] == 0 && (hit_z_[p] & kHitUnder)) || out_z_[p] == 0;
      case NestedMode::worst_case:
        return out_z_[p] == 0;
      case NestedMode::over:
        return out_y_[p] == 0 && (hit_z_[p] & kHitOver);
    }
    return false;
  }

  // Input choice for a non-target state entering at `level`: prefer sure
  // progress (F̄ ⊆ Z), then almost-sure progress, lowest input index first.
  void choose(CellId q, std::uint32_t level, Controller& c) const {
    for (std::size_t u = 0; u < ts_.inputs(); ++u) {
      if (out_z_[ts_.pair(q, u)] == 0) {
        c.assign(q, u, ControlMode::sure_progress, level);
        return;
      }
    }
    for (std::size_t u = 0; u < ts_.inputs(); ++u) {
      const auto p = ts_.pair(q, u);
      if (out_y_[p] == 0 && (hit_z_[p] & kHitUnder)) {
        c.assign(q, u, ControlMode::almost_sure_progress, level);
        return;
      }
    }
    throw std::logic_error("buchi_under: no input satisfies the selection predicate for state " + std::to_string(q));
  }

  const TransitionSystem& ts_;
  NestedMode mode_;
  const AbstractSet& target_;
  std::vector<std::uint32_t> out_y_;
  std::vector<std::uint32_t> out_z_;
  std::vector<std::uint8_t> hit_z_;
  std::vector<std::uint8_t> touched_mark_;
  std::vector<TransitionSystem::PairIndex> touched_;
};

}  // namespace detail

/// Cells fully inside B (under-approximation) and cells meeting B
/// (over-approximation). Obstacle cells and the sink belong to neither.
/// Cell boundaries within 1e-9 of a width from a face of B count as lying on
/// it, so a B drawn on grid lines is matched exactly despite rounding of the
/// boundary coordinates; a cell merely touching B is not in the
/// over-approximation unless B is flat in that dimension.
struct TargetSets {
  AbstractSet under;
  AbstractSet over;
};

inline TargetSets target_sets(const Grid& g, const Box& b) {
  if (b.dim() != g.dim()) throw std::invalid_argument("target_sets: dimension mismatch");
  if (b.is_empty()) throw std::invalid_argument("target_sets: empty target box");
  for (std::size_t i = 0; i < g.dim(); ++i) {
    const double tol = 1e-9 * g.widths()[i];
    if (b.lo[i] < g.region().lo[i] - tol || b.hi[i] > g.region().hi[i] + tol) {
      throw std::invalid_argument("target_sets: target " + to_string(b) + " is not inside the working region");
    }
  }
  TargetSets t{AbstractSet(g.universe()), AbstractSet(g.universe())};
  std::vector<std::pair<std::size_t, std::size_t>> inner(g.dim()), outer(g.dim());
  bool inner_empty = false, outer_empty = false;
  for (std::size_t i = 0; i < g.dim(); ++i) {
    const std::size_t n = g.cells_per_dim()[i];
    std::size_t first = n, last = 0;
    bool any = false;
    std::size_t ofirst = n, olast = 0;
    bool oany = false;
    const double tol = 1e-9 * g.widths()[i];
    const bool flat = !(b.hi[i] > b.lo[i]);
    for (std::size_t k = 0; k < n; ++k) {
      const double a = g.boundary(i, k);
      const double c = g.boundary(i, k + 1);
      if (a >= b.lo[i] - tol && c <= b.hi[i] + tol) {
        if (!any) first = k;
        last = k;
        any = true;
      }
      const bool meets = flat ? (a <= b.hi[i] && c >= b.lo[i]) : (a < b.hi[i] - tol && c > b.lo[i] + tol);
      if (meets) {
        if (!oany) ofirst = k;
        olast = k;
        oany = true;
      }
    }
    inner[i] = {first, last};
    outer[i] = {ofirst, olast};
    if (!any) inner_empty = true;
    if (!oany) outer_empty = true;
  }
  auto fill = [&](const std::vector<std::pair<std::size_t, std::size_t>>& ranges, AbstractSet& out) {
    std::vector<std::size_t> k(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i) k[i] = ranges[i].first;
    while (true) {
      const CellId c = g.index_of(k);
      if (!g.is_obstacle(c)) out.insert(c);
      std::size_t i = g.dim();
      bool done = true;
      while (i > 0) {
        --i;
        if (++k[i] <= ranges[i].second) {
          done = false;
          break;
        }
        k[i] = ranges[i].first;
      }
      if (done) return;
    }
  };
  if (!inner_empty) fill(inner, t.under);
  if (!outer_empty) fill(outer, t.over);
  return t;
}

/// Almost-sure reachability: νY.μZ.(B̲ᶜ ∩ (Apre(Y,Z) ∪ Cpre_F̄(Z))) ∪ B̲.
inline FixpointResult as_reach(const TransitionSystem& ts, const AbstractSet& target) {
  FixpointResult r;
  detail::NestedFixpoint fp(ts, detail::NestedMode::as_reach, target);
  r.set = fp.run(AbstractSet::full(ts.states()), nullptr, r.stats);
  return r;
}

/// Under-approximation of the almost-sure Büchi winning region with an abstract
/// controller:
///   νY.μZ.(B̲ᶜ ∩ (Apre(Y,Z) ∪ Cpre_F̄(Z))) ∪ (B̲ ∩ Cpre_F̄(Y)).
///
/// The outer iteration starts from the full set or from `warm_start`, which
/// must contain the result (the over-approximation qualifies). The controller
/// of the last outer pass is kept; target states get a safety input
/// (F̄(q,u) ⊆ W̲) at the end. Ties go to sure progress, then the lowest index.
inline BuchiUnderResult buchi_under(const TransitionSystem& ts, const AbstractSet& target,
                                    const std::optional<AbstractSet>& warm_start = std::nullopt) {
  BuchiUnderResult r;
  detail::NestedFixpoint fp(ts, detail::NestedMode::under, target);
  AbstractSet y0 = warm_start ? *warm_start : AbstractSet::full(ts.states());
  if (y0.universe() != ts.states()) throw std::invalid_argument("buchi_under: warm start universe mismatch");
  r.winning = fp.run(std::move(y0), &r.controller, r.stats);
  (r.winning & target).for_each([&](CellId q) {
    for (std::size_t u = 0; u < ts.inputs(); ++u) {
      if (detail::subset(ts.over(q, u), r.winning)) {
        r.controller.assign(q, u, ControlMode::safety, 1);
        return;
      }
    }
    throw std::logic_error("buchi_under: target state " + std::to_string(q) + " has no safe input");
  });
  return r;
}

/// Over-approximation of the almost-sure Büchi winning region:
///   νY.μZ.(B̄ᶜ ∩ Upre(Y,Z)) ∪ (B̄ ∩ (Cpre_F̲(Y) ∪ Pre_{F̄∖F̲}(Y))).
inline FixpointResult buchi_over(const TransitionSystem& ts, const AbstractSet& target) {
  FixpointResult r;
  detail::NestedFixpoint fp(ts, detail::NestedMode::over, target);
  r.set = fp.run(AbstractSet::full(ts.states()), nullptr, r.stats);
  return r;
}

/// Classical Büchi game on F̄ with a worst-case adversary:
///   νY.μZ.(B̲ ∩ Cpre_F̄(Y)) ∪ (B̲ᶜ ∩ Cpre_F̄(Z)).
inline FixpointResult worst_case_buchi(const TransitionSystem& ts, const AbstractSet& target) {
  FixpointResult r;
  detail::NestedFixpoint fp(ts, detail::NestedMode::worst_case, target);
  r.set = fp.run(AbstractSet::full(ts.states()), nullptr, r.stats);
  return r;
}

/// Over-approximation of the states that reach W̲ with probability zero:
/// the complement of μX. Pre_F̲(X) ∪ W̲.
inline FixpointResult losing_over(const TransitionSystem& ts, const AbstractSet& winning_under) {
  FixpointResult r;
  AbstractSet x = winning_under;
  std::vector<CellId> frontier = x.to_vector();
  ++r.stats.outer_iterations;
  while (!frontier.empty()) {
    ++r.stats.inner_iterations;
    std::vector<CellId> next;
    for (CellId t : frontier) {
      for (auto p : ts.predecessors(Relation::under, t)) {
        const auto q = static_cast<CellId>(p / ts.inputs());
        if (!x.contains(q)) {
          x.insert(q);
          next.push_back(q);
        }
      }
    }
    frontier = std::move(next);
  }
  r.set = x.complement();
  return r;
}

/// Re-checks every controller entry against the predicate recorded when it
/// was assigned. Returns a description of the first violation, or nothing.
inline std::optional<std::string> verify_controller(const TransitionSystem& ts, const AbstractSet& target,
                                                    const AbstractSet& winning, const Controller& c) {
  if (!(c.domain() == winning)) return "controller domain differs from the winning region";
  std::optional<std::string> error;
  winning.for_each([&](CellId q) {
    if (error) return;
    const std::size_t u = *c.input(q);
    const auto over = ts.over(q, u);
    const auto under = ts.under(q, u);
    auto earlier = [&](CellId s) { return winning.contains(s) && c.level(s) < c.level(q); };
    switch (c.mode(q)) {
      case ControlMode::safety:
        if (!target.contains(q) || !detail::subset(over, winning)) error = "safety input leaves W at " + std::to_string(q);
        break;
      case ControlMode::sure_progress:
        if (target.contains(q) || !std::all_of(over.begin(), over.end(), earlier)) {
          error = "sure-progress input violated at " + std::to_string(q);
        }
        break;
      case ControlMode::almost_sure_progress:
        if (target.contains(q) || !detail::subset(over, winning) || !std::any_of(under.begin(), under.end(), earlier)) {
          error = "almost-sure-progress input violated at " + std::to_string(q);
        }
        break;
      case ControlMode::none:
        error = "state " + std::to_string(q) + " has no input";
        break;
    }
  });
  return error;
}

}  // namespace sbsynth
