#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sbsynth/abstract_set.hpp"
#include "sbsynth/transition_system.hpp"

// Brute-force reference for almost-sure Büchi on small systems where the two
// relations coincide, i.e. a finite MDP whose transition supports are the
// successor sets. Every stationary deterministic strategy is enumerated; under
// each, a state wins iff every bottom SCC reachable from it meets the target.
// Memoryless pure strategies suffice for this objective, so the union over
// strategies is the winning region.

namespace sbsynth {

namespace detail {

// Tarjan SCCs on a tiny graph; returns the component id per vertex.
inline std::vector<int> strongly_connected(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
  std::vector<bool> on(n, false);
  int counter = 0, ncomp = 0;
  std::function<void(int)> visit = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on[v] = true;
    for (int w : adj[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      while (true) {
        const int w = stack.back();
        stack.pop_back();
        on[w] = false;
        comp[w] = ncomp;
        if (w == v) break;
      }
      ++ncomp;
    }
  };
  for (int v = 0; v < n; ++v) {
    if (index[v] < 0) visit(v);
  }
  return comp;
}

}  // namespace detail

inline constexpr std::size_t oracle_max_states = 10;
inline constexpr std::size_t oracle_max_inputs = 3;

/// Almost-sure Büchi winning region by strategy enumeration. Uses F̄ as the
/// support; throws if F̲ ≠ F̄ or the system exceeds 10 states or 3 inputs.
inline AbstractSet oracle_as_buchi(const TransitionSystem& ts, const AbstractSet& target) {
  const std::size_t n = ts.states();
  const std::size_t m = ts.inputs();
  if (n > oracle_max_states || m > oracle_max_inputs) {
    throw std::invalid_argument("oracle_as_buchi: limited to 10 states and 3 inputs");
  }
  for (std::size_t p = 0; p < ts.pairs(); ++p) {
    const auto o = ts.over(static_cast<TransitionSystem::PairIndex>(p));
    const auto u = ts.under(static_cast<TransitionSystem::PairIndex>(p));
    if (!std::equal(o.begin(), o.end(), u.begin(), u.end())) {
      throw std::invalid_argument("oracle_as_buchi: requires identical over and under relations");
    }
  }
  AbstractSet win(n);
  std::vector<std::size_t> choice(n, 0);
  std::vector<std::vector<int>> adj(n);
  while (true) {
    for (std::size_t q = 0; q < n; ++q) {
      adj[q].clear();
      for (CellId t : ts.over(static_cast<CellId>(q), choice[q])) adj[q].push_back(static_cast<int>(t));
    }
    const auto comp = detail::strongly_connected(adj);
    const int ncomp = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
    std::vector<bool> bottom(ncomp, true), accepting(ncomp, false);
    for (std::size_t q = 0; q < n; ++q) {
      if (target.contains(static_cast<CellId>(q))) accepting[comp[q]] = true;
      for (int w : adj[q]) {
        if (comp[w] != comp[q]) bottom[comp[q]] = false;
      }
    }
    for (std::size_t q = 0; q < n; ++q) {
      if (win.contains(static_cast<CellId>(q))) continue;
      std::vector<bool> seen(n, false);
      std::vector<int> todo{static_cast<int>(q)};
      seen[q] = true;
      bool ok = true;
      while (!todo.empty() && ok) {
        const int v = todo.back();
        todo.pop_back();
        if (bottom[comp[v]] && !accepting[comp[v]]) ok = false;
        for (int w : adj[v]) {
          if (!seen[w]) {
            seen[w] = true;
            todo.push_back(w);
          }
        }
      }
      if (ok) win.insert(static_cast<CellId>(q));
    }
    std::size_t k = 0;
    while (k < n && ++choice[k] == m) choice[k++] = 0;
    if (k == n) break;
  }
  return win;
}

}  // namespace sbsynth
