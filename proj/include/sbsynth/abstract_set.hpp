#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace sbsynth {

/// Abstract state index. For grid-based systems the sink is `Grid::sink()`,
/// which is the largest index of the universe.
using CellId = std::uint32_t;

/// Dense bitset over a fixed universe {0, ..., universe-1} of abstract states.
/// Iteration is ascending by index, so the sink (the last index) comes last.
class AbstractSet {
 public:
  AbstractSet() = default;
  explicit AbstractSet(std::size_t universe) : universe_(universe), words_((universe + 63) / 64, 0) {}
  AbstractSet(std::size_t universe, std::initializer_list<CellId> cells) : AbstractSet(universe) {
    for (CellId c : cells) insert(c);
  }

  static AbstractSet full(std::size_t universe) {
    AbstractSet s(universe);
    for (auto& w : s.words_) w = ~std::uint64_t{0};
    s.trim();
    return s;
  }

  template <class Range>
  static AbstractSet from(std::size_t universe, const Range& cells) {
    AbstractSet s(universe);
    for (auto c : cells) s.insert(static_cast<CellId>(c));
    return s;
  }

  std::size_t universe() const { return universe_; }

  bool contains(CellId c) const { return c < universe_ && ((words_[c >> 6] >> (c & 63)) & 1U); }
  void insert(CellId c) {
    check(c);
    words_[c >> 6] |= std::uint64_t{1} << (c & 63);
  }
  void erase(CellId c) {
    check(c);
    words_[c >> 6] &= ~(std::uint64_t{1} << (c & 63));
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool empty() const {
    for (auto w : words_) {
      if (w) return false;
    }
    return true;
  }

  AbstractSet& operator|=(const AbstractSet& o) {
    same_universe(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  AbstractSet& operator&=(const AbstractSet& o) {
    same_universe(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  /// Set difference.
  AbstractSet& operator-=(const AbstractSet& o) {
    same_universe(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
    return *this;
  }

  friend AbstractSet operator|(AbstractSet a, const AbstractSet& b) { return a |= b; }
  friend AbstractSet operator&(AbstractSet a, const AbstractSet& b) { return a &= b; }
  friend AbstractSet operator-(AbstractSet a, const AbstractSet& b) { return a -= b; }

  AbstractSet complement() const {
    AbstractSet r(universe_);
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = ~words_[i];
    r.trim();
    return r;
  }

  bool is_subset_of(const AbstractSet& o) const {
    same_universe(o);
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i] & ~o.words_[i]) return false;
    }
    return true;
  }

  bool intersects(const AbstractSet& o) const {
    same_universe(o);
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i] & o.words_[i]) return true;
    }
    return false;
  }

  friend bool operator==(const AbstractSet& a, const AbstractSet& b) {
    return a.universe_ == b.universe_ && a.words_ == b.words_;
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      std::uint64_t w = words_[i];
      while (w) {
        const int b = std::countr_zero(w);
        f(static_cast<CellId>(i * 64 + static_cast<std::size_t>(b)));
        w &= w - 1;
      }
    }
  }

  std::vector<CellId> to_vector() const {
    std::vector<CellId> v;
    v.reserve(size());
    for_each([&](CellId c) { v.push_back(c); });
    return v;
  }

 private:
  void check(CellId c) const {
    if (c >= universe_) throw std::out_of_range("AbstractSet: index outside universe");
  }
  void same_universe(const AbstractSet& o) const {
    if (o.universe_ != universe_) throw std::invalid_argument("AbstractSet: universe mismatch");
  }
  void trim() {
    if (universe_ % 64 != 0 && !words_.empty()) {
      words_.back() &= (std::uint64_t{1} << (universe_ % 64)) - 1;
    }
  }

  std::size_t universe_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace sbsynth
