#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbsynth/abstract_set.hpp"
#include "sbsynth/box.hpp"

namespace sbsynth {

/// Uniform partition of a hyper-rectangular working region into half-open
/// cells [a, a+w), plus one symbolic sink cell for everything outside the
/// working region or inside an obstacle.
///
/// In a non-periodic dimension the topmost cell is closed, so every point of
/// the region lies in exactly one cell. Periodic dimensions wrap instead.
/// Cell indices are row-major (last dimension fastest); the sink is the index
/// `cell_count()`, so the abstract universe has `cell_count() + 1` elements.
class Grid {
 public:
  Grid() = default;

  static Grid build(const Box& region, std::vector<double> widths, std::vector<bool> periodic = {},
                    std::vector<Box> obstacles = {}) {
    const std::size_t n = region.dim();
    if (n == 0 || region.is_empty()) throw std::invalid_argument("grid: working region is empty");
    if (periodic.empty()) periodic.assign(n, false);
    if (widths.size() != n || periodic.size() != n) {
      throw std::invalid_argument("grid: widths/periodic flags do not match the region dimension");
    }
    Grid g;
    g.region_ = region;
    g.widths_ = std::move(widths);
    g.periodic_ = std::move(periodic);
    g.cells_per_dim_.resize(n);
    g.cell_count_ = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = g.widths_[i];
      if (!(w > 0.0)) {
        throw std::invalid_argument("grid: width in dimension " + std::to_string(i) + " must be positive");
      }
      const double span = region.hi[i] - region.lo[i];
      const double cells = std::round(span / w);
      if (cells < 1.0 || std::abs(cells * w - span) > 1e-9 * w) {
        throw std::invalid_argument("grid: width " + std::to_string(w) + " does not divide the region extent " +
                                    std::to_string(span) + " in dimension " + std::to_string(i));
      }
      if (cells > static_cast<double>(std::numeric_limits<CellId>::max())) {
        throw std::invalid_argument("grid: too many cells in dimension " + std::to_string(i));
      }
      g.cells_per_dim_[i] = static_cast<std::size_t>(cells);
      g.cell_count_ *= g.cells_per_dim_[i];
    }
    if (g.cell_count_ >= std::numeric_limits<CellId>::max()) throw std::invalid_argument("grid: too many cells");
    g.strides_.assign(n, 1);
    for (std::size_t i = n - 1; i > 0; --i) g.strides_[i - 1] = g.strides_[i] * g.cells_per_dim_[i];

    g.obstacle_cells_ = AbstractSet(g.cell_count_ + 1);
    for (const Box& o : obstacles) {
      if (o.dim() != n) throw std::invalid_argument("grid: obstacle dimension mismatch");
      if (o.is_empty()) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const double tol = 1e-9 * g.widths_[i];
        if (o.lo[i] < region.lo[i] - tol || o.hi[i] > region.hi[i] + tol) {
          throw std::invalid_argument("grid: obstacle " + to_string(o) + " is not inside the working region");
        }
      }
      g.for_each_cell_overlapping(o, [&](CellId c) { g.obstacle_cells_.insert(c); });
    }
    g.obstacles_ = std::move(obstacles);
    return g;
  }

  std::size_t dim() const { return widths_.size(); }
  std::size_t cell_count() const { return cell_count_; }
  /// Size of the abstract universe (cells plus the sink).
  std::size_t universe() const { return cell_count_ + 1; }
  CellId sink() const { return static_cast<CellId>(cell_count_); }

  const Box& region() const { return region_; }
  const std::vector<double>& widths() const { return widths_; }
  const std::vector<bool>& periodic() const { return periodic_; }
  const std::vector<std::size_t>& cells_per_dim() const { return cells_per_dim_; }
  const std::vector<Box>& obstacles() const { return obstacles_; }
  const AbstractSet& obstacle_cells() const { return obstacle_cells_; }
  bool is_obstacle(CellId c) const { return obstacle_cells_.contains(c); }

  double cell_volume() const {
    double v = 1.0;
    for (double w : widths_) v *= w;
    return v;
  }

  /// Coordinate of the k-th cell boundary in dimension i (k = 0 .. cells_per_dim[i]).
  double boundary(std::size_t i, std::size_t k) const {
    if (k >= cells_per_dim_[i]) return region_.hi[i];
    return region_.lo[i] + static_cast<double>(k) * widths_[i];
  }

  /// Every non-sink, non-obstacle cell.
  AbstractSet working_cells() const {
    AbstractSet s = AbstractSet::full(universe());
    s.erase(sink());
    s -= obstacle_cells_;
    return s;
  }

  CellId index_of(std::span<const std::size_t> coords) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < coords.size(); ++i) idx += coords[i] * strides_[i];
    return static_cast<CellId>(idx);
  }

  std::vector<std::size_t> coords_of(CellId c) const {
    std::vector<std::size_t> k(dim());
    std::size_t rest = c;
    for (std::size_t i = 0; i < dim(); ++i) {
      k[i] = rest / strides_[i];
      rest %= strides_[i];
    }
    return k;
  }

  /// Maps periodic coordinates into [lo, hi); leaves others untouched.
  void wrap(std::span<double> s) const {
    for (std::size_t i = 0; i < dim(); ++i) {
      if (!periodic_[i]) continue;
      const double span = region_.hi[i] - region_.lo[i];
      double x = std::fmod(s[i] - region_.lo[i], span);
      if (x < 0.0) x += span;
      if (x >= span) x = 0.0;
      s[i] = region_.lo[i] + x;
    }
  }

  /// The unique cell containing `s`, or the sink if `s` lies outside the
  /// working region or in an obstacle cell.
  CellId quantize(std::span<const double> s) const {
    if (s.size() != dim()) throw std::invalid_argument("quantize: state dimension mismatch");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < dim(); ++i) {
      double x = s[i];
      if (std::isnan(x)) return sink();
      if (periodic_[i]) {
        if (!std::isfinite(x)) return sink();
        const double span = region_.hi[i] - region_.lo[i];
        double r = std::fmod(x - region_.lo[i], span);
        if (r < 0.0) r += span;
        if (r >= span) r = 0.0;
        x = region_.lo[i] + r;
      } else if (x < region_.lo[i] || x > region_.hi[i]) {
        return sink();
      }
      idx += locate(i, x) * strides_[i];
    }
    const auto c = static_cast<CellId>(idx);
    return obstacle_cells_.contains(c) ? sink() : c;
  }

  /// Closed hull [a, a+w] of a cell.
  Box cell_box(CellId c) const {
    if (c >= cell_count_) throw std::invalid_argument("cell_box: the sink cell has no box");
    Box b{std::vector<double>(dim()), std::vector<double>(dim())};
    std::size_t rest = c;
    for (std::size_t i = 0; i < dim(); ++i) {
      const std::size_t k = rest / strides_[i];
      rest %= strides_[i];
      b.lo[i] = boundary(i, k);
      b.hi[i] = boundary(i, k + 1);
    }
    return b;
  }

  /// True if `s` lies in the half-open cell c (closed at the top boundary of
  /// non-periodic dimensions). Uses the same boundary arithmetic as quantize.
  bool cell_contains(CellId c, std::span<const double> s) const {
    const Box b = cell_box(c);
    const auto k = coords_of(c);
    for (std::size_t i = 0; i < dim(); ++i) {
      const bool top_closed = !periodic_[i] && k[i] + 1 == cells_per_dim_[i];
      if (s[i] < b.lo[i]) return false;
      if (top_closed ? s[i] > b.hi[i] : s[i] >= b.hi[i]) return false;
    }
    return true;
  }

  /// Index range [first, last] of cells in dimension i whose closed extent
  /// intersects [a, b] (a, b already clipped to the region). Empty if first > last.
  std::pair<std::size_t, std::size_t> closed_range(std::size_t i, double a, double b) const {
    const std::size_t n = cells_per_dim_[i];
    if (b < region_.lo[i] || a > region_.hi[i] || a > b) return {1, 0};
    std::size_t first = locate(i, std::max(a, region_.lo[i]));
    while (first > 0 && boundary(i, first) >= a) --first;
    while (first < n && boundary(i, first + 1) < a) ++first;
    std::size_t last = locate(i, std::min(b, region_.hi[i]));
    while (last + 1 < n && boundary(i, last + 1) <= b) ++last;
    while (last > 0 && boundary(i, last) > b) --last;
    return {first, last};
  }

  /// Index range of cells in dimension i whose extent overlaps (a, b) with
  /// positive length. Empty (first > last) if none.
  std::pair<std::size_t, std::size_t> open_range(std::size_t i, double a, double b) const {
    const std::size_t n = cells_per_dim_[i];
    if (!(b > a) || b <= region_.lo[i] || a >= region_.hi[i]) return {1, 0};
    std::size_t first = locate(i, std::max(a, region_.lo[i]));
    while (first + 1 < n && boundary(i, first + 1) <= a) ++first;
    while (first > 0 && boundary(i, first) > a) --first;
    std::size_t last = locate(i, std::min(b, region_.hi[i]));
    while (last > 0 && boundary(i, last) >= b) --last;
    while (last + 1 < n && boundary(i, last + 1) < b) ++last;
    return {first, last};
  }

  /// Calls f for every cell whose box overlaps `box` with positive volume.
  template <class F>
  void for_each_cell_overlapping(const Box& box, F&& f) const {
    std::vector<std::pair<std::size_t, std::size_t>> ranges(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      ranges[i] = open_range(i, box.lo[i], box.hi[i]);
      if (ranges[i].first > ranges[i].second) return;
    }
    std::vector<std::size_t> k(dim());
    for (std::size_t i = 0; i < dim(); ++i) k[i] = ranges[i].first;
    while (true) {
      f(index_of(k));
      std::size_t i = dim();
      while (i > 0) {
        --i;
        if (++k[i] <= ranges[i].second) break;
        k[i] = ranges[i].first;
        if (i == 0) return;
      }
    }
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.region_ == b.region_ && a.widths_ == b.widths_ && a.periodic_ == b.periodic_ &&
           a.obstacle_cells_ == b.obstacle_cells_;
  }

 private:
  // Cell index in dimension i of a coordinate x already inside [lo, hi].
  std::size_t locate(std::size_t i, double x) const {
    const std::size_t n = cells_per_dim_[i];
    double q = std::floor((x - region_.lo[i]) / widths_[i]);
    std::size_t k = q <= 0.0 ? 0 : (q >= static_cast<double>(n - 1) ? n - 1 : static_cast<std::size_t>(q));
    while (k > 0 && x < boundary(i, k)) --k;
    while (k + 1 < n && x >= boundary(i, k + 1)) ++k;
    return k;
  }

  Box region_;
  std::vector<double> widths_;
  std::vector<bool> periodic_;
  std::vector<std::size_t> cells_per_dim_;
  std::vector<std::size_t> strides_;
  std::size_t cell_count_ = 0;
  std::vector<Box> obstacles_;
  AbstractSet obstacle_cells_;
};

inline Grid build_grid(const Box& region, std::vector<double> widths, std::vector<bool> periodic = {},
                       std::vector<Box> obstacles = {}) {
  return Grid::build(region, std::move(widths), std::move(periodic), std::move(obstacles));
}

/// Lebesgue volume of a set of cells. The sink has no volume.
inline double volume(const Grid& g, const AbstractSet& cells) {
  if (cells.contains(g.sink())) throw std::invalid_argument("volume: set contains the sink cell");
  return static_cast<double>(cells.size()) * g.cell_volume();
}

}  // namespace sbsynth
