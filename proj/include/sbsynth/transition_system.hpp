#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbsynth/abstract_set.hpp"

namespace sbsynth {

/// Which successor relation an operator works on: the over-approximating
/// relation F̄, the under-approximating relation F̲, or F̄ ∖ F̲.
enum class Relation { over, under, difference };

/// Finite transition system with two successor relations F̲ ⊆ F̄ over states
/// {0, ..., states()-1} and inputs {0, ..., inputs()-1}.
///
/// Successor lists are stored per (state, input) pair in compressed rows,
/// sorted ascending; pair index p = state * inputs() + input. Reverse
/// adjacency (pairs having a given state as successor) is precomputed for F̄,
/// F̲ and F̄ ∖ F̲.
class TransitionSystem {
 public:
  using PairIndex = std::uint32_t;

  TransitionSystem() = default;

  /// From per-pair successor lists; `over[p]` and `under[p]` for p = q * n_inputs + u.
  TransitionSystem(std::size_t n_states, std::size_t n_inputs, const std::vector<std::vector<CellId>>& over,
                   const std::vector<std::vector<CellId>>& under, std::optional<CellId> sink = std::nullopt)
      : n_states_(n_states), n_inputs_(n_inputs), sink_(sink) {
    if (over.size() != pairs() || under.size() != pairs()) {
      throw std::invalid_argument("TransitionSystem: expected one successor list per (state, input) pair");
    }
    pack(over, over_off_, over_succ_);
    pack(under, under_off_, under_succ_);
    finalize();
  }

  /// From compressed rows (offsets of size pairs()+1). Rows must be sorted and duplicate free.
  static TransitionSystem from_rows(std::size_t n_states, std::size_t n_inputs, std::vector<std::size_t> over_offsets,
                                    std::vector<CellId> over_successors, std::vector<std::size_t> under_offsets,
                                    std::vector<CellId> under_successors, std::optional<CellId> sink = std::nullopt) {
    TransitionSystem ts;
    ts.n_states_ = n_states;
    ts.n_inputs_ = n_inputs;
    ts.sink_ = sink;
    ts.over_off_ = std::move(over_offsets);
    ts.over_succ_ = std::move(over_successors);
    ts.under_off_ = std::move(under_offsets);
    ts.under_succ_ = std::move(under_successors);
    if (ts.over_off_.size() != ts.pairs() + 1 || ts.under_off_.size() != ts.pairs() + 1) {
      throw std::invalid_argument("TransitionSystem: offset arrays have the wrong size");
    }
    ts.finalize();
    return ts;
  }

  std::size_t states() const { return n_states_; }
  std::size_t inputs() const { return n_inputs_; }
  std::size_t pairs() const { return n_states_ * n_inputs_; }
  std::optional<CellId> sink() const { return sink_; }
  std::size_t over_edges() const { return over_succ_.size(); }
  std::size_t under_edges() const { return under_succ_.size(); }

  std::span<const CellId> over(CellId q, std::size_t u) const { return over(pair(q, u)); }
  std::span<const CellId> under(CellId q, std::size_t u) const { return under(pair(q, u)); }
  std::span<const CellId> over(PairIndex p) const {
    return {over_succ_.data() + over_off_[p], over_succ_.data() + over_off_[p + 1]};
  }
  std::span<const CellId> under(PairIndex p) const {
    return {under_succ_.data() + under_off_[p], under_succ_.data() + under_off_[p + 1]};
  }
  std::span<const CellId> successors(Relation r, PairIndex p) const {
    return r == Relation::under ? under(p) : over(p);
  }

  /// Pairs p with t ∈ F(p) for the given relation.
  std::span<const PairIndex> predecessors(Relation r, CellId t) const {
    const auto& rev = r == Relation::over ? over_rev_ : (r == Relation::under ? under_rev_ : diff_rev_);
    return {rev.items.data() + rev.offsets[t], rev.items.data() + rev.offsets[t + 1]};
  }

  PairIndex pair(CellId q, std::size_t u) const { return static_cast<PairIndex>(q * n_inputs_ + u); }

  /// Bitwise equality of both relations.
  friend bool operator==(const TransitionSystem& a, const TransitionSystem& b) {
    return a.n_states_ == b.n_states_ && a.n_inputs_ == b.n_inputs_ && a.sink_ == b.sink_ &&
           a.over_off_ == b.over_off_ && a.over_succ_ == b.over_succ_ && a.under_off_ == b.under_off_ &&
           a.under_succ_ == b.under_succ_;
  }

 private:
  struct Reverse {
    std::vector<std::size_t> offsets;
    std::vector<PairIndex> items;
  };

  void pack(const std::vector<std::vector<CellId>>& rows, std::vector<std::size_t>& off, std::vector<CellId>& succ) {
    off.assign(rows.size() + 1, 0);
    for (std::size_t p = 0; p < rows.size(); ++p) off[p + 1] = off[p] + rows[p].size();
    succ.resize(off.back());
    for (std::size_t p = 0; p < rows.size(); ++p) {
      std::vector<CellId> r = rows[p];
      std::sort(r.begin(), r.end());
      if (std::adjacent_find(r.begin(), r.end()) != r.end()) {
        throw std::invalid_argument("TransitionSystem: duplicate successor in pair " + std::to_string(p));
      }
      std::copy(r.begin(), r.end(), succ.begin() + static_cast<std::ptrdiff_t>(off[p]));
    }
  }

  void finalize() {
    if (n_inputs_ == 0) throw std::invalid_argument("TransitionSystem: no inputs");
    if (static_cast<double>(pairs()) >= 4294967295.0) throw std::invalid_argument("TransitionSystem: too many pairs");
    for (std::size_t p = 0; p < pairs(); ++p) {
      const auto o = over(static_cast<PairIndex>(p));
      const auto u = under(static_cast<PairIndex>(p));
      if (o.empty()) {
        throw std::logic_error("TransitionSystem: empty over-approximating successor set for pair " +
                               std::to_string(p));
      }
      for (std::size_t i = 0; i < o.size(); ++i) {
        if (o[i] >= n_states_ || (i > 0 && o[i - 1] >= o[i])) {
          throw std::invalid_argument("TransitionSystem: successor rows must be sorted, unique and in range");
        }
      }
      for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] >= n_states_ || (i > 0 && u[i - 1] >= u[i])) {
          throw std::invalid_argument("TransitionSystem: successor rows must be sorted, unique and in range");
        }
      }
      if (!std::includes(o.begin(), o.end(), u.begin(), u.end())) {
        throw std::logic_error("TransitionSystem: under-approximation not contained in over-approximation at pair " +
                               std::to_string(p));
      }
    }
    if (sink_) {
      if (*sink_ >= n_states_) throw std::invalid_argument("TransitionSystem: sink out of range");
      for (std::size_t u = 0; u < n_inputs_; ++u) {
        const auto o = over(*sink_, u);
        const auto n = under(*sink_, u);
        if (o.size() != 1 || o[0] != *sink_ || n.size() != 1 || n[0] != *sink_) {
          throw std::logic_error("TransitionSystem: sink is not absorbing");
        }
      }
    }
    build_reverse(Relation::over, over_rev_);
    build_reverse(Relation::under, under_rev_);
    build_reverse(Relation::difference, diff_rev_);
  }

  template <class F>
  void for_each_edge(Relation r, F&& f) const {
    for (std::size_t p = 0; p < pairs(); ++p) {
      const auto pi = static_cast<PairIndex>(p);
      if (r != Relation::difference) {
        for (CellId t : successors(r, pi)) f(pi, t);
        continue;
      }
      const auto o = over(pi);
      const auto u = under(pi);
      std::size_t j = 0;
      for (CellId t : o) {
        while (j < u.size() && u[j] < t) ++j;
        if (j < u.size() && u[j] == t) continue;
        f(pi, t);
      }
    }
  }

  void build_reverse(Relation r, Reverse& rev) const {
    rev.offsets.assign(n_states_ + 1, 0);
    for_each_edge(r, [&](PairIndex, CellId t) { ++rev.offsets[t + 1]; });
    for (std::size_t t = 0; t < n_states_; ++t) rev.offsets[t + 1] += rev.offsets[t];
    rev.items.resize(rev.offsets.back());
    std::vector<std::size_t> fill(rev.offsets.begin(), rev.offsets.end() - 1);
    for_each_edge(r, [&](PairIndex p, CellId t) { rev.items[fill[t]++] = p; });
  }

  std::size_t n_states_ = 0;
  std::size_t n_inputs_ = 0;
  std::optional<CellId> sink_;
  std::vector<std::size_t> over_off_;
  std::vector<CellId> over_succ_;
  std::vector<std::size_t> under_off_;
  std::vector<CellId> under_succ_;
  Reverse over_rev_;
  Reverse under_rev_;
  Reverse diff_rev_;
};

}  // namespace sbsynth
