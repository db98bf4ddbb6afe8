#pragma once

#include <algorithm>
#include <cstddef>
#include <span>

#include "sbsynth/abstract_set.hpp"
#include "sbsynth/transition_system.hpp"

// Predecessor operators over abstract sets. These are direct transcriptions of
// the set definitions (one pass over all pairs); the fixed-point solvers use
// an incremental evaluation instead and are tested against these.

namespace sbsynth {

namespace detail {

inline bool subset(std::span<const CellId> succ, const AbstractSet& t) {
  return std::all_of(succ.begin(), succ.end(), [&](CellId c) { return t.contains(c); });
}
inline bool meets(std::span<const CellId> succ, const AbstractSet& t) {
  return std::any_of(succ.begin(), succ.end(), [&](CellId c) { return t.contains(c); });
}

// F̄(p) ∖ F̲(p) intersects t.
inline bool difference_meets(std::span<const CellId> over, std::span<const CellId> under, const AbstractSet& t) {
  std::size_t j = 0;
  for (CellId c : over) {
    while (j < under.size() && under[j] < c) ++j;
    if (j < under.size() && under[j] == c) continue;
    if (t.contains(c)) return true;
  }
  return false;
}

inline bool difference_subset(std::span<const CellId> over, std::span<const CellId> under, const AbstractSet& t) {
  std::size_t j = 0;
  for (CellId c : over) {
    while (j < under.size() && under[j] < c) ++j;
    if (j < under.size() && under[j] == c) continue;
    if (!t.contains(c)) return false;
  }
  return true;
}

template <class Pred>
AbstractSet exists_input(const TransitionSystem& ts, Pred&& pred) {
  AbstractSet r(ts.states());
  for (std::size_t q = 0; q < ts.states(); ++q) {
    for (std::size_t u = 0; u < ts.inputs(); ++u) {
      if (pred(ts.pair(static_cast<CellId>(q), u))) {
        r.insert(static_cast<CellId>(q));
        break;
      }
    }
  }
  return r;
}

}  // namespace detail

/// Controllable predecessor: {q | ∃u. F(q,u) ⊆ T}. Empty images qualify vacuously.
inline AbstractSet cpre(const TransitionSystem& ts, Relation rel, const AbstractSet& t) {
  return detail::exists_input(ts, [&](TransitionSystem::PairIndex p) {
    if (rel == Relation::difference) return detail::difference_subset(ts.over(p), ts.under(p), t);
    return detail::subset(ts.successors(rel, p), t);
  });
}

/// Cooperative predecessor: {q | ∃u. F(q,u) ∩ T ≠ ∅}.
inline AbstractSet pre(const TransitionSystem& ts, Relation rel, const AbstractSet& t) {
  return detail::exists_input(ts, [&](TransitionSystem::PairIndex p) {
    if (rel == Relation::difference) return detail::difference_meets(ts.over(p), ts.under(p), t);
    return detail::meets(ts.successors(rel, p), t);
  });
}

/// Almost-sure predecessor: {q | ∃u. F̄(q,u) ⊆ Y ∧ F̲(q,u) ∩ Z ≠ ∅}.
inline AbstractSet apre(const TransitionSystem& ts, const AbstractSet& y, const AbstractSet& z) {
  return detail::exists_input(ts, [&](TransitionSystem::PairIndex p) {
    return detail::subset(ts.over(p), y) && detail::meets(ts.under(p), z);
  });
}

/// Uncertain predecessor: {q | ∃u. F̲(q,u) ⊆ Y ∧ F̄(q,u) ∩ Z ≠ ∅}.
inline AbstractSet upre(const TransitionSystem& ts, const AbstractSet& y, const AbstractSet& z) {
  return detail::exists_input(ts, [&](TransitionSystem::PairIndex p) {
    return detail::subset(ts.under(p), y) && detail::meets(ts.over(p), z);
  });
}

}  // namespace sbsynth
