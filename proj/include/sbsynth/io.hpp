#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <vector>

#include "sbsynth/abstract_set.hpp"
#include "sbsynth/grid.hpp"
#include "sbsynth/simulate.hpp"
#include "sbsynth/solver.hpp"

// Plain-text formats for regions, controllers and trajectories.
//
//   REGION v1
//   dims=<n> lo=<a,b,..> hi=<..> w=<..> periodic=<0|1,..>
//   <cell>            one per line, ascending; the sink is written as PHI
//
//   CONTROLLER v1
//   <grid line>
//   <cell> <input>    ascending by cell

namespace sbsynth {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error("parse error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Round-trippable decimal form (17 significant digits).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct GridSpec {
  std::vector<double> lo, hi, widths;
  std::vector<bool> periodic;

  static GridSpec of(const Grid& g) {
    return {g.region().lo, g.region().hi, g.widths(), g.periodic()};
  }
  std::size_t dim() const { return lo.size(); }
  bool operator==(const GridSpec&) const = default;
};

inline std::string grid_line(const GridSpec& s) {
  auto list = [](const auto& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::vector<bool>>) out += v[i] ? '1' : '0';
      else out += format_double(v[i]);
    }
    return out;
  };
  return "dims=" + std::to_string(s.dim()) + " lo=" + list(s.lo) + " hi=" + list(s.hi) + " w=" + list(s.widths) +
         " periodic=" + list(s.periodic);
}

namespace detail {

// Line-oriented reader that remembers byte offsets for error messages.
class TextCursor {
 public:
  explicit TextCursor(std::string_view text) : text_(text) {}

  bool at_end() const { return pos_ >= text_.size(); }
  std::size_t offset() const { return pos_; }

  /// Next line without its terminator; sets `start` to its offset.
  std::optional<std::string_view> line(std::size_t& start) {
    if (at_end()) return std::nullopt;
    start = pos_;
    const std::size_t nl = text_.find('\n', pos_);
    const std::size_t end = nl == std::string_view::npos ? text_.size() : nl;
    std::string_view l = text_.substr(pos_, end - pos_);
    pos_ = nl == std::string_view::npos ? text_.size() : nl + 1;
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    return l;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

template <class T>
T parse_number(std::string_view tok, std::size_t offset, const char* what) {
  T v{};
  const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || end != tok.data() + tok.size() || tok.empty()) {
    throw ParseError(offset, std::string("expected ") + what + ", found '" + std::string(tok) + "'");
  }
  return v;
}

inline std::vector<std::pair<std::string_view, std::size_t>> split(std::string_view s, char sep, std::size_t base) {
  std::vector<std::pair<std::string_view, std::size_t>> out;
  std::size_t i = 0;
  while (true) {
    const std::size_t j = s.find(sep, i);
    out.emplace_back(s.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i), base + i);
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  return out;
}

inline std::vector<std::pair<std::string_view, std::size_t>> words(std::string_view s, std::size_t base) {
  std::vector<std::pair<std::string_view, std::size_t>> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t j = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > j) out.emplace_back(s.substr(j, i - j), base + j);
  }
  return out;
}

inline void expect_header(TextCursor& cur, std::string_view header) {
  std::size_t at = 0;
  const auto l = cur.line(at);
  if (!l || *l != header) throw ParseError(at, "expected header '" + std::string(header) + "'");
}

inline GridSpec parse_grid_line(TextCursor& cur) {
  std::size_t at = 0;
  const auto l = cur.line(at);
  if (!l) throw ParseError(cur.offset(), "missing grid line");
  const auto w = words(*l, at);
  const char* keys[] = {"dims", "lo", "hi", "w", "periodic"};
  if (w.size() != 5) throw ParseError(at, "grid line must have the fields dims, lo, hi, w, periodic");
  GridSpec s;
  std::size_t n = 0;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto [tok, off] = w[f];
    const std::string key = std::string(keys[f]) + "=";
    if (tok.substr(0, key.size()) != key) throw ParseError(off, "expected field '" + key + "'");
    const std::string_view val = tok.substr(key.size());
    if (f == 0) {
      n = parse_number<std::size_t>(val, off + key.size(), "a dimension");
      if (n == 0) throw ParseError(off + key.size(), "dimension must be positive");
      continue;
    }
    const auto items = split(val, ',', off + key.size());
    if (items.size() != n) throw ParseError(off, "field " + std::string(keys[f]) + " needs " + std::to_string(n) + " entries");
    for (const auto& [item, ioff] : items) {
      switch (f) {
        case 1: s.lo.push_back(parse_number<double>(item, ioff, "a number")); break;
        case 2: s.hi.push_back(parse_number<double>(item, ioff, "a number")); break;
        case 3: s.widths.push_back(parse_number<double>(item, ioff, "a number")); break;
        default:
          if (item != "0" && item != "1") throw ParseError(ioff, "periodic flags must be 0 or 1");
          s.periodic.push_back(item == "1");
      }
    }
  }
  return s;
}

}  // namespace detail

inline void require_grid(const GridSpec& file, const Grid& g, const std::string& what) {
  if (!(file == GridSpec::of(g))) {
    throw std::invalid_argument(what + ": grid in file (" + grid_line(file) + ") does not match the configured grid (" +
                                grid_line(GridSpec::of(g)) + ")");
  }
}

// ---- regions ----

inline std::string format_region(const Grid& g, const AbstractSet& cells) {
  if (cells.universe() != g.universe()) throw std::invalid_argument("format_region: set and grid sizes differ");
  std::string out = "REGION v1\n" + grid_line(GridSpec::of(g)) + "\n";
  cells.for_each([&](CellId c) {
    out += c == g.sink() ? std::string("PHI") : std::to_string(c);
    out += '\n';
  });
  return out;
}

struct RegionFile {
  GridSpec grid;
  std::vector<CellId> cells;  // ascending, without the sink
  bool has_sink = false;

  /// The set over `universe` = cell count + 1.
  AbstractSet to_set(std::size_t universe) const {
    AbstractSet s = AbstractSet::from(universe, cells);
    if (has_sink) s.insert(static_cast<CellId>(universe - 1));
    return s;
  }
};

inline RegionFile parse_region(std::string_view text) {
  detail::TextCursor cur(text);
  detail::expect_header(cur, "REGION v1");
  RegionFile r;
  r.grid = detail::parse_grid_line(cur);
  std::size_t cell_count = 1;
  for (std::size_t i = 0; i < r.grid.dim(); ++i) {
    cell_count *= static_cast<std::size_t>(std::llround((r.grid.hi[i] - r.grid.lo[i]) / r.grid.widths[i]));
  }
  std::size_t at = 0;
  while (auto l = cur.line(at)) {
    if (l->empty() && cur.at_end()) break;
    if (r.has_sink) throw ParseError(at, "PHI must be the last entry");
    if (*l == "PHI") {
      r.has_sink = true;
      continue;
    }
    const auto c = detail::parse_number<CellId>(*l, at, "a cell index");
    if (c >= cell_count) throw ParseError(at, "cell index " + std::to_string(c) + " is outside the grid");
    if (!r.cells.empty() && c <= r.cells.back()) throw ParseError(at, "cell indices must be strictly ascending");
    r.cells.push_back(c);
  }
  return r;
}

// ---- controllers ----

inline std::string format_controller(const Grid& g, const Controller& c) {
  if (c.universe() != g.universe()) throw std::invalid_argument("format_controller: controller and grid sizes differ");
  std::string out = "CONTROLLER v1\n" + grid_line(GridSpec::of(g)) + "\n";
  for (std::size_t q = 0; q < c.universe(); ++q) {
    if (auto u = c.input(static_cast<CellId>(q))) out += std::to_string(q) + ' ' + std::to_string(*u) + '\n';
  }
  return out;
}

struct ControllerFile {
  GridSpec grid;
  std::vector<std::pair<CellId, std::size_t>> entries;

  /// Input map only; selection modes and levels are not stored on disk.
  Controller to_controller(std::size_t universe) const {
    Controller c(universe);
    for (const auto& [q, u] : entries) c.assign(q, u, ControlMode::none, 0);
    return c;
  }
};

inline ControllerFile parse_controller(std::string_view text) {
  detail::TextCursor cur(text);
  detail::expect_header(cur, "CONTROLLER v1");
  ControllerFile f;
  f.grid = detail::parse_grid_line(cur);
  std::size_t at = 0;
  while (auto l = cur.line(at)) {
    if (l->empty() && cur.at_end()) break;
    const auto w = detail::words(*l, at);
    if (w.size() != 2) throw ParseError(at, "expected '<cell> <input>'");
    const auto q = detail::parse_number<CellId>(w[0].first, w[0].second, "a cell index");
    const auto u = detail::parse_number<std::size_t>(w[1].first, w[1].second, "an input index");
    if (!f.entries.empty() && q <= f.entries.back().first) throw ParseError(at, "cell indices must be strictly ascending");
    f.entries.emplace_back(q, u);
  }
  return f;
}

// ---- trajectories ----

/// One line per step: `k s[0] .. s[n-1] u flags`. The input is `-` on the final
/// state; flags are letters B (in target), W (in W̲), P (sink), N (no
/// guarantee), or `-` when none apply.
inline std::string format_trajectory(const Trajectory& tr) {
  std::string out;
  for (std::size_t k = 0; k < tr.steps.size(); ++k) {
    const auto& st = tr.steps[k];
    out += std::to_string(k);
    for (double x : st.state) out += ' ' + format_double(x);
    out += ' ';
    out += st.input ? std::to_string(*st.input) : std::string("-");
    std::string flags;
    if (st.in_target) flags += 'B';
    if (st.in_winning) flags += 'W';
    if (st.hit_sink) flags += 'P';
    if (st.no_guarantee) flags += 'N';
    out += ' ' + (flags.empty() ? std::string("-") : flags) + '\n';
  }
  return out;
}

// ---- files ----

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Writes via a temporary file in the same directory followed by a rename.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace sbsynth
