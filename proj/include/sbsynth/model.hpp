#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sbsynth/box.hpp"
#include "sbsynth/geometry.hpp"
#include "sbsynth/interval.hpp"

namespace sbsynth {

enum class NoiseKind { uniform, truncated_gaussian };

/// Sampled-time system s' = f(s, u) + w with a finite input list and additive
/// noise w supported on a box D.
///
/// `noise_over` (D̄ ⊇ D) drives the over-approximating transitions and
/// `noise_under` (D̲ ⊆ D, density strictly positive on it) the
/// under-approximating ones. `noise_support` is D itself, used for sampling.
struct SystemModel {
  using PointMap = std::function<void(std::span<const double>, std::size_t, std::span<double>)>;

  std::string name;
  std::size_t dim = 0;
  std::vector<std::vector<double>> inputs;
  BoxMap reach;
  PointMap nominal;
  Box noise_support;
  Box noise_over;
  Box noise_under;
  NoiseKind noise = NoiseKind::uniform;

  std::size_t input_count() const { return inputs.size(); }

  std::vector<double> step_nominal(std::span<const double> s, std::size_t u) const {
    std::vector<double> out(dim);
    nominal(s, u, out);
    return out;
  }

  void validate() const {
    if (dim == 0) throw std::invalid_argument("model " + name + ": zero dimension");
    if (inputs.empty()) throw std::invalid_argument("model " + name + ": empty input list");
    if (!reach || !nominal) throw std::invalid_argument("model " + name + ": missing dynamics");
    for (const Box* b : {&noise_support, &noise_over, &noise_under}) {
      if (b->dim() != dim) throw std::invalid_argument("model " + name + ": noise box dimension mismatch");
    }
    if (noise_under.volume() <= 0.0) {
      throw std::invalid_argument("model " + name + ": the noise under-approximation must have positive volume");
    }
    if (!noise_over.contains(noise_under)) {
      throw std::invalid_argument("model " + name + ": noise under-approximation is not inside the over-approximation");
    }
    if (!noise_over.contains(noise_support)) {
      throw std::invalid_argument("model " + name + ": noise support is not inside the over-approximation");
    }
  }

  /// Replaces the noise boxes: D̄ = D, D̲ = D shrunk by `under_margin` per side.
  void set_noise(const Box& support, double under_margin = 0.0) {
    noise_support = support;
    noise_over = support;
    noise_under = support;
    for (std::size_t i = 0; i < support.dim(); ++i) {
      noise_under.lo[i] += under_margin;
      noise_under.hi[i] -= under_margin;
    }
  }
};

/// The one-dimensional chains on [0, 2] with kernel
///   s ∈ [1,2]: next state uniform on [1,2];
///   s = 0:     stay at 0 w.p. 1/2, else uniform on [1,2];
///   s ∈ (0,1): jump to b(s) = s/(1+s) w.p. 1-a(s), else uniform on [1,2].
/// `quadratic` uses a(s) = s², `constant` uses a(s) = 1/2.
struct FiniteCMP {
  enum class Branch { quadratic, constant };

  std::string name;
  Branch branch = Branch::quadratic;

  double a(double s) const { return branch == Branch::quadratic ? s * s : 0.5; }
  static double b(double s) { return s / (1.0 + s); }

  /// Probability of jumping to the uniform segment [1,2] from s.
  double jump_weight(double s) const {
    if (s >= 1.0) return 1.0;
    if (s == 0.0) return 0.5;
    return a(s);
  }
  /// Location and weight of the point mass reached from s, if any.
  std::pair<double, double> atom(double s) const {
    if (s >= 1.0) return {0.0, 0.0};
    if (s == 0.0) return {0.0, 0.5};
    return {b(s), 1.0 - a(s)};
  }

  /// Exact one-step probability of the interval [lo, hi) (or [lo, hi] when
  /// `closed` is set) from state s.
  double mass(double s, double lo, double hi, bool closed = false) const {
    const double seg = std::max(0.0, std::min(hi, 2.0) - std::max(lo, 1.0));
    double m = jump_weight(s) * seg;
    const auto [where, weight] = atom(s);
    if (weight > 0.0 && where >= lo && (closed ? where <= hi : where < hi)) m += weight;
    return m;
  }

  template <class Rng>
  double sample_next(double s, Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < jump_weight(s)) return 1.0 + unit(rng);
    return atom(s).first;
  }
};

using System = std::variant<SystemModel, FiniteCMP>;

/// Parameters for the built-in systems, by name: `tau`, `V`, `inputs`,
/// `noise` (half-width of the box support, per dimension or one value).
using SystemParams = std::map<std::string, std::vector<double>>;

namespace detail {

inline double param(const SystemParams& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  if (it->second.size() != 1) throw std::invalid_argument("parameter " + key + " must be a single number");
  return it->second.front();
}

inline Box symmetric_box(const SystemParams& p, std::size_t dim, double half_width) {
  std::vector<double> hw(dim, half_width);
  if (auto it = p.find("noise"); it != p.end()) {
    if (it->second.size() == 1) hw.assign(dim, it->second.front());
    else if (it->second.size() == dim) hw = it->second;
    else throw std::invalid_argument("parameter noise must have 1 or " + std::to_string(dim) + " entries");
  }
  Box b{std::vector<double>(dim), std::vector<double>(dim)};
  for (std::size_t i = 0; i < dim; ++i) {
    b.lo[i] = -hw[i];
    b.hi[i] = hw[i];
  }
  return b;
}

}  // namespace detail

/// Van der Pol oscillator, Euler-sampled with step tau; one (dummy) input.
inline SystemModel vanderpol(const SystemParams& p = {}) {
  const double tau = detail::param(p, "tau", 0.1);
  SystemModel m;
  m.name = "vanderpol";
  m.dim = 2;
  m.inputs = {{0.0}};
  m.nominal = [tau](std::span<const double> s, std::size_t, std::span<double> out) {
    out[0] = s[0] + s[1] * tau;
    out[1] = s[1] + (-s[0] + (1.0 - s[0] * s[0]) * s[1]) * tau;
  };
  m.reach = BoxMap::interval_extension([tau](const Box& cell, std::size_t) {
    const Interval x1(cell.lo[0], cell.hi[0]);
    const Interval x2(cell.lo[1], cell.hi[1]);
    const Interval y1 = x1 + x2 * tau;
    // Same map as x2 + (-x1 + (1 - x1^2) x2) tau, grouped so that x2 occurs
    // once; the enclosure is then close to the exact image.
    const Interval y2 = x2 * (1.0 + tau * (1.0 - sqr(x1))) - tau * x1;
    return Box({y1.lo, y2.lo}, {y1.hi, y2.hi});
  });
  m.set_noise(detail::symmetric_box(p, 2, 0.02));
  return m;
}

/// Default Dubins turn rates: -1.5 to 1.5 in steps of 0.1. Small rates matter;
/// with only multiples of 0.5 the heading noise cannot be corrected and the
/// under-approximation is empty at the benchmark grids.
inline std::vector<double> dubins_default_inputs() {
  std::vector<double> r;
  for (int k = -15; k <= 15; ++k) r.push_back(k / 10.0);
  return r;
}

/// Dubins vehicle with constant forward speed V, sampled with step tau; the
/// input is the turn rate. State (x1, x2, heading).
inline SystemModel dubins(const SystemParams& p = {}) {
  const double tau = detail::param(p, "tau", 1.0);
  const double v = detail::param(p, "V", 0.1);
  std::vector<double> rates = dubins_default_inputs();
  if (auto it = p.find("inputs"); it != p.end()) rates = it->second;
  if (rates.empty()) throw std::invalid_argument("dubins: empty input list");
  SystemModel m;
  m.name = "dubins";
  m.dim = 3;
  for (double r : rates) m.inputs.push_back({r});
  m.nominal = [tau, v, rates](std::span<const double> s, std::size_t ui, std::span<double> out) {
    const double u = rates[ui];
    if (u != 0.0) {
      out[0] = s[0] + v / u * std::sin(s[2] + u * tau) - v / u * std::sin(s[2]);
      out[1] = s[1] - v / u * std::cos(s[2] + u * tau) + v / u * std::cos(s[2]);
      out[2] = s[2] + u * tau;
    } else {
      out[0] = s[0] + v * std::cos(s[2]) * tau;
      out[1] = s[1] - v * std::sin(s[2]) * tau;
      out[2] = s[2];
    }
  };
  m.reach = BoxMap::interval_extension([tau, v, rates](const Box& cell, std::size_t ui) {
    const double u = rates[ui];
    const Interval x1(cell.lo[0], cell.hi[0]);
    const Interval x2(cell.lo[1], cell.hi[1]);
    const Interval x3(cell.lo[2], cell.hi[2]);
    Interval y1, y2, y3;
    if (u != 0.0) {
      // sin(a+c) - sin(a) = 2 sin(c/2) cos(a + c/2), and -cos(a+c) + cos(a) =
      // 2 sin(c/2) sin(a + c/2): the heading then occurs once, so the
      // monotonicity-aware enclosures of sin/cos are tight.
      const double k = 2.0 * v / u * std::sin(u * tau / 2.0);
      const Interval mid = x3 + u * tau / 2.0;
      y1 = x1 + k * cos(mid);
      y2 = x2 + k * sin(mid);
      y3 = x3 + u * tau;
    } else {
      y1 = x1 + (v * tau) * cos(x3);
      y2 = x2 - (v * tau) * sin(x3);
      y3 = x3;
    }
    // The rewritten trigonometric form differs from the point formula by
    // rounding only; widen by a few ulps of the magnitude to cover it.
    auto pad = [](Interval a) {
      const double e = 8.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(a.lo), std::abs(a.hi)});
      return Interval(a.lo - e, a.hi + e);
    };
    y1 = pad(y1);
    y2 = pad(y2);
    return Box({y1.lo, y2.lo, y3.lo}, {y1.hi, y2.hi, y3.hi});
  });
  m.set_noise(detail::symmetric_box(p, 3, 0.06));
  return m;
}

inline FiniteCMP chain(const std::string& name) {
  if (name == "chain-ex43") return FiniteCMP{name, FiniteCMP::Branch::quadratic};
  if (name == "chain-ex52") return FiniteCMP{name, FiniteCMP::Branch::constant};
  throw std::invalid_argument("unknown chain " + name + " (valid: chain-ex43, chain-ex52)");
}

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"vanderpol", "dubins", "chain-ex43", "chain-ex52"};
  return names;
}

inline System builtin_system(const std::string& name, const SystemParams& params = {}) {
  if (name == "vanderpol") return vanderpol(params);
  if (name == "dubins") return dubins(params);
  if (name == "chain-ex43" || name == "chain-ex52") return chain(name);
  std::string valid;
  for (const auto& n : builtin_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown system '" + name + "' (valid: " + valid + ")");
}

}  // namespace sbsynth
