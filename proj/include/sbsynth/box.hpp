#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbsynth {

/// Axis-aligned closed hyper-rectangle [lo, hi].
///
/// A box with lo[i] > hi[i] in any dimension is empty. All empty boxes compare
/// equal, regardless of their dimension or bounds.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  Box() = default;
  Box(std::vector<double> lower, std::vector<double> upper)
      : lo(std::move(lower)), hi(std::move(upper)) {
    if (lo.size() != hi.size()) {
      throw std::invalid_argument("Box: lower and upper bounds differ in dimension");
    }
  }

  static Box empty(std::size_t dim) {
    return Box(std::vector<double>(dim, 1.0), std::vector<double>(dim, 0.0));
  }

  static Box point(std::span<const double> p) {
    return Box(std::vector<double>(p.begin(), p.end()), std::vector<double>(p.begin(), p.end()));
  }

  std::size_t dim() const { return lo.size(); }

  bool is_empty() const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (lo[i] > hi[i]) return true;
    }
    return false;
  }

  double width(std::size_t i) const { return hi[i] - lo[i]; }

  /// Lebesgue measure; zero for empty and degenerate boxes.
  double volume() const {
    if (is_empty()) return 0.0;
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
  }

  bool contains(std::span<const double> p) const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
    }
    return true;
  }

  /// True if `other` is a subset of this box. The empty box is a subset of every box.
  bool contains(const Box& other) const {
    if (other.is_empty()) return true;
    if (is_empty()) return false;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (other.lo[i] < lo[i] || other.hi[i] > hi[i]) return false;
    }
    return true;
  }

  /// Closed intersection test: boxes sharing only a boundary intersect.
  bool intersects(const Box& other) const {
    if (is_empty() || other.is_empty()) return false;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (other.hi[i] < lo[i] || other.lo[i] > hi[i]) return false;
    }
    return true;
  }

  /// True if the intersection has positive Lebesgue measure.
  bool overlaps_with_volume(const Box& other) const {
    if (is_empty() || other.is_empty()) return false;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (std::min(hi[i], other.hi[i]) <= std::max(lo[i], other.lo[i])) return false;
    }
    return true;
  }

  Box intersection(const Box& other) const {
    if (is_empty() || other.is_empty()) return Box::empty(dim());
    Box r = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      r.lo[i] = std::max(lo[i], other.lo[i]);
      r.hi[i] = std::min(hi[i], other.hi[i]);
    }
    return r;
  }

  friend bool operator==(const Box& a, const Box& b) {
    const bool ea = a.is_empty();
    const bool eb = b.is_empty();
    if (ea || eb) return ea && eb;
    return a.lo == b.lo && a.hi == b.hi;
  }
};

inline std::string to_string(const Box& b) {
  if (b.is_empty()) return "(empty)";
  std::string s;
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (i) s += "x";
    s += "[" + std::to_string(b.lo[i]) + "," + std::to_string(b.hi[i]) + "]";
  }
  return s;
}

}  // namespace sbsynth
