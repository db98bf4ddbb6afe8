#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sbsynth {

/// Closed real interval with outward-rounded arithmetic. Every operation
/// widens its result by one ulp on each side, which keeps the enclosure
/// sound under round-to-nearest evaluation of the same expression at a point.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  constexpr Interval(double l, double h) : lo(l), hi(h) {}
  constexpr explicit Interval(double x) : lo(x), hi(x) {}

  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

namespace detail {
inline Interval outward(double lo, double hi) {
  return {std::nextafter(lo, -std::numeric_limits<double>::infinity()),
          std::nextafter(hi, std::numeric_limits<double>::infinity())};
}
}  // namespace detail

inline Interval operator+(Interval a, Interval b) { return detail::outward(a.lo + b.lo, a.hi + b.hi); }
inline Interval operator-(Interval a, Interval b) { return detail::outward(a.lo - b.hi, a.hi - b.lo); }
inline Interval operator-(Interval a) { return {-a.hi, -a.lo}; }
inline Interval operator+(Interval a, double b) { return a + Interval(b); }
inline Interval operator+(double a, Interval b) { return Interval(a) + b; }
inline Interval operator-(Interval a, double b) { return a - Interval(b); }
inline Interval operator-(double a, Interval b) { return Interval(a) - b; }

inline Interval operator*(Interval a, Interval b) {
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return detail::outward(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}
inline Interval operator*(double k, Interval a) {
  if (k >= 0.0) return detail::outward(k * a.lo, k * a.hi);
  return detail::outward(k * a.hi, k * a.lo);
}
inline Interval operator*(Interval a, double k) { return k * a; }

inline Interval sqr(Interval a) {
  if (a.lo >= 0.0) return detail::outward(a.lo * a.lo, a.hi * a.hi);
  if (a.hi <= 0.0) return detail::outward(a.hi * a.hi, a.lo * a.lo);
  const double m = std::max(a.lo * a.lo, a.hi * a.hi);
  return {0.0, std::nextafter(m, std::numeric_limits<double>::infinity())};
}

/// Tight enclosure of cos over [lo, hi]: endpoints plus any interior extrema
/// (multiples of pi).
inline Interval cos(Interval a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (a.hi - a.lo >= two_pi) return {-1.0, 1.0};
  const double c1 = std::cos(a.lo);
  const double c2 = std::cos(a.hi);
  double lo = std::min(c1, c2);
  double hi = std::max(c1, c2);
  // Slightly enlarged search range: including an extremum by mistake only loosens.
  const double slack = 1e-12 * std::max(1.0, std::abs(a.lo) + std::abs(a.hi));
  const double k_max = std::ceil((a.lo - slack) / two_pi);
  if (k_max * two_pi <= a.hi + slack) hi = 1.0;
  const double k_min = std::ceil((a.lo - slack - std::numbers::pi) / two_pi);
  if (k_min * two_pi + std::numbers::pi <= a.hi + slack) lo = -1.0;
  Interval r = detail::outward(lo, hi);
  r.lo = std::max(r.lo, -1.0);
  r.hi = std::min(r.hi, 1.0);
  return r;
}

inline Interval sin(Interval a) {
  // sin(x) = cos(x - pi/2); the shift is widened so the identity stays an enclosure.
  return cos(a - std::numbers::pi / 2.0);
}

}  // namespace sbsynth
