#pragma once

#include <random>
#include <vector>

#include "sbsynth/abstract_set.hpp"
#include "sbsynth/transition_system.hpp"

namespace testing_support {

using sbsynth::AbstractSet;
using sbsynth::CellId;
using sbsynth::TransitionSystem;

// Random two-relation system: every over-image is a non-empty random subset
// and the under-image a random subset of it (or identical when `same`).
inline TransitionSystem random_system(std::mt19937_64& rng, std::size_t states, std::size_t inputs, bool same,
                                      double density = 0.35) {
  std::bernoulli_distribution pick(density), keep(0.6);
  std::uniform_int_distribution<std::size_t> any(0, states - 1);
  std::vector<std::vector<CellId>> over(states * inputs), under(states * inputs);
  for (std::size_t p = 0; p < over.size(); ++p) {
    for (std::size_t t = 0; t < states; ++t) {
      if (pick(rng)) over[p].push_back(static_cast<CellId>(t));
    }
    if (over[p].empty()) over[p].push_back(static_cast<CellId>(any(rng)));
    for (CellId t : over[p]) {
      if (same || keep(rng)) under[p].push_back(t);
    }
  }
  return TransitionSystem(states, inputs, over, under);
}

inline AbstractSet random_set(std::mt19937_64& rng, std::size_t universe, double density = 0.4) {
  std::bernoulli_distribution pick(density);
  AbstractSet s(universe);
  for (std::size_t i = 0; i < universe; ++i) {
    if (pick(rng)) s.insert(static_cast<CellId>(i));
  }
  return s;
}

}  // namespace testing_support
