#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sbsynth/box.hpp"
#include "sbsynth/interval.hpp"

namespace sbsynth {

/// A ⊕ B = [a.lo + b.lo, a.hi + b.hi].
inline Box minkowski_sum(const Box& a, const Box& b) {
  if (a.is_empty() || b.is_empty()) throw std::invalid_argument("minkowski_sum: empty operand");
  if (a.dim() != b.dim()) throw std::invalid_argument("minkowski_sum: dimension mismatch");
  Box r = a;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    r.lo[i] = a.lo[i] + b.lo[i];
    r.hi[i] = a.hi[i] + b.hi[i];
  }
  return r;
}

/// D ⊖ (-Φ): the points s' with s' - p ∈ D for every p ∈ Φ, i.e.
/// [d.lo + phi.hi, d.hi + phi.lo]. Empty when Φ is wider than D in some dimension.
inline Box minkowski_diff_negated(const Box& d_under, const Box& phi) {
  if (d_under.is_empty() || phi.is_empty()) throw std::invalid_argument("minkowski_diff_negated: empty operand");
  if (d_under.dim() != phi.dim()) throw std::invalid_argument("minkowski_diff_negated: dimension mismatch");
  Box r = d_under;
  for (std::size_t i = 0; i < d_under.dim(); ++i) {
    r.lo[i] = d_under.lo[i] + phi.hi[i];
    r.hi[i] = d_under.hi[i] + phi.lo[i];
  }
  return r;
}

enum class BoxMapKind { interval_extension, decomposition_function };

/// Over-approximation of the image of a closed box under the nominal map
/// f(·, u), for each input index u.
class BoxMap {
 public:
  using Evaluator = std::function<Box(const Box&, std::size_t)>;
  /// h_u(x, y), with h_u(x, x) = f(x, u), increasing in x and decreasing in y.
  using Decomposition = std::function<std::vector<double>(std::size_t, std::span<const double>, std::span<const double>)>;

  BoxMap() = default;

  static BoxMap interval_extension(Evaluator f) {
    BoxMap m;
    m.kind_ = BoxMapKind::interval_extension;
    m.eval_ = std::move(f);
    return m;
  }

  /// Mixed-monotone reach sets: the image of [a, b] is enclosed by [h(a, b), h(b, a)].
  static BoxMap decomposition(Decomposition h) {
    BoxMap m;
    m.kind_ = BoxMapKind::decomposition_function;
    m.eval_ = [h = std::move(h)](const Box& cell, std::size_t u) {
      return Box(h(u, cell.lo, cell.hi), h(u, cell.hi, cell.lo));
    };
    return m;
  }

  BoxMapKind kind() const { return kind_; }
  explicit operator bool() const { return static_cast<bool>(eval_); }

  Box operator()(const Box& cell, std::size_t u) const { return eval_(cell, u); }

 private:
  BoxMapKind kind_ = BoxMapKind::interval_extension;
  Evaluator eval_;
};

/// Box enclosing {f(s, u) : s ∈ cell}.
inline Box reach_box(const BoxMap& m, const Box& cell, std::size_t u) {
  if (cell.is_empty()) throw std::invalid_argument("reach_box: empty cell");
  Box r;
  try {
    r = m(cell, u);
  } catch (const std::exception& e) {
    throw std::runtime_error("reach_box: evaluation failed on cell " + to_string(cell) + " input " +
                             std::to_string(u) + ": " + e.what());
  }
  bool finite = r.dim() == cell.dim();
  for (std::size_t i = 0; finite && i < r.dim(); ++i) {
    finite = std::isfinite(r.lo[i]) && std::isfinite(r.hi[i]) && r.lo[i] <= r.hi[i];
  }
  if (!finite) {
    throw std::runtime_error("reach_box: non-finite or inverted reach set on cell " + to_string(cell) + " input " +
                             std::to_string(u));
  }
  return r;
}

/// Interval vector view of a box, for writing interval-extension evaluators.
inline std::vector<Interval> to_intervals(const Box& b) {
  std::vector<Interval> v(b.dim());
  for (std::size_t i = 0; i < b.dim(); ++i) v[i] = Interval(b.lo[i], b.hi[i]);
  return v;
}

inline Box to_box(std::span<const Interval> v) {
  Box b{std::vector<double>(v.size()), std::vector<double>(v.size())};
  for (std::size_t i = 0; i < v.size(); ++i) {
    b.lo[i] = v[i].lo;
    b.hi[i] = v[i].hi;
  }
  return b;
}

}  // namespace sbsynth
