#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sbsynth/box.hpp"
#include "sbsynth/grid.hpp"
#include "sbsynth/model.hpp"

// Problem files: `[section]` headers followed by `key = value` lines. `#`
// starts a comment. Numbers may be written as products and quotients of
// decimals and `pi`, e.g. `2*pi/63` or `-pi`. Lists are comma separated; boxes
// are written `[lo, hi] x [lo, hi] x ...`.
//
//   [system]     name, and model parameters (tau, V, inputs, noise)
//   [grid]       region (box), widths (list), periodic (list of 0/1),
//                obstacle (box, may repeat)
//   [target]     box
//   [noise]      kind = uniform | truncated-gaussian; over, under (boxes)
//   [solver]     warm_start = true | false; compute = under | over | both |
//                worst-case | losing; threads
//   [simulation] trials, horizon, seed

namespace sbsynth {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class ComputeSet { under, over, both, worst_case, losing };

inline const char* to_string(ComputeSet c) {
  switch (c) {
    case ComputeSet::under: return "under";
    case ComputeSet::over: return "over";
    case ComputeSet::both: return "both";
    case ComputeSet::worst_case: return "worst-case";
    case ComputeSet::losing: return "losing";
  }
  return "?";
}

inline std::optional<ComputeSet> parse_compute(std::string_view s) {
  for (auto c : {ComputeSet::under, ComputeSet::over, ComputeSet::both, ComputeSet::worst_case, ComputeSet::losing}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

struct ProblemConfig {
  std::string system;
  SystemParams params;
  Box region;
  std::vector<double> widths;
  std::vector<bool> periodic;
  std::vector<Box> obstacles;
  Box target;
  NoiseKind noise = NoiseKind::uniform;
  std::optional<Box> noise_over;
  std::optional<Box> noise_under;
  bool warm_start = true;
  ComputeSet compute = ComputeSet::both;
  unsigned threads = 0;
  std::size_t trials = 100;
  std::size_t horizon = 3000;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// number := factor (('*' | '/') factor)*,  factor := '-'? (decimal | 'pi')
class ExprParser {
 public:
  ExprParser(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  double parse() {
    double v = factor();
    while (true) {
      skip();
      if (pos_ < s_.size() && (s_[pos_] == '*' || s_[pos_] == '/')) {
        const char op = s_[pos_++];
        const double r = factor();
        v = op == '*' ? v * r : v / r;
      } else {
        break;
      }
    }
    skip();
    if (pos_ != s_.size()) fail();
    return v;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail() const { throw ConfigError(line_, "malformed number '" + std::string(s_) + "'"); }

  double factor() {
    skip();
    bool neg = false;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) neg = s_[pos_++] == '-';
    skip();
    if (s_.substr(pos_, 2) == "pi") {
      pos_ += 2;
      return neg ? -std::numbers::pi : std::numbers::pi;
    }
    const std::string rest(s_.substr(pos_));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(rest, &used);
    } catch (const std::exception&) {
      fail();
    }
    if (used == 0 || (!std::isdigit(static_cast<unsigned char>(rest[0])) && rest[0] != '.')) fail();
    pos_ += used;
    return neg ? -v : v;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

inline double parse_expr(std::string_view s, std::size_t line) { return ExprParser(trim(s), line).parse(); }

inline std::vector<double> parse_list(std::string_view s, std::size_t line) {
  std::vector<double> out;
  s = trim(s);
  if (s.empty()) throw ConfigError(line, "empty list");
  while (true) {
    const std::size_t j = s.find(',');
    out.push_back(parse_expr(s.substr(0, j), line));
    if (j == std::string_view::npos) break;
    s.remove_prefix(j + 1);
  }
  return out;
}

inline Box parse_box(std::string_view s, std::size_t line) {
  std::vector<double> lo, hi;
  s = trim(s);
  while (true) {
    if (s.empty() || s.front() != '[') throw ConfigError(line, "expected '[lo, hi]' in box");
    const std::size_t close = s.find(']');
    if (close == std::string_view::npos) throw ConfigError(line, "unterminated interval in box");
    const auto v = parse_list(s.substr(1, close - 1), line);
    if (v.size() != 2) throw ConfigError(line, "each box interval needs exactly two bounds");
    if (!(v[0] <= v[1])) throw ConfigError(line, "box interval with lower bound above upper bound");
    lo.push_back(v[0]);
    hi.push_back(v[1]);
    s = trim(s.substr(close + 1));
    if (s.empty()) break;
    if (s.front() != 'x' && s.front() != 'X') throw ConfigError(line, "expected 'x' between box intervals");
    s = trim(s.substr(1));
  }
  return Box(lo, hi);
}

inline bool parse_bool(std::string_view s, std::size_t line) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(line, "expected true or false, found '" + std::string(s) + "'");
}

inline std::uint64_t parse_count(std::string_view s, std::size_t line) {
  const double v = parse_expr(s, line);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19) {
    throw ConfigError(line, "expected a non-negative integer, found '" + std::string(s) + "'");
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace detail

/// Parses and validates a problem description.
inline ProblemConfig parse_config(std::string_view text) {
  using namespace detail;
  ProblemConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::map<std::string, std::size_t> where;
  std::size_t line_no = 0;
  const std::set<std::string> sections{"system", "grid", "target", "noise", "solver", "simulation"};
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string_view::npos) {
      if (line.back() != ']') throw ConfigError(line_no, "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!sections.count(section)) throw ConfigError(line_no, "unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
    if (section.empty()) throw ConfigError(line_no, "key outside of any section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    if (full != "grid.obstacle") {
      if (!seen.insert(full).second) throw ConfigError(line_no, "duplicate key " + full);
    }
    where[full] = line_no;

    if (section == "system") {
      if (key == "name") cfg.system = std::string(value);
      else cfg.params[key] = parse_list(value, line_no);
    } else if (section == "grid") {
      if (key == "region") cfg.region = parse_box(value, line_no);
      else if (key == "widths") cfg.widths = parse_list(value, line_no);
      else if (key == "periodic") {
        for (double v : parse_list(value, line_no)) {
          if (v != 0.0 && v != 1.0) throw ConfigError(line_no, "periodic flags must be 0 or 1");
          cfg.periodic.push_back(v == 1.0);
        }
      } else if (key == "obstacle") cfg.obstacles.push_back(parse_box(value, line_no));
      else throw ConfigError(line_no, "unknown key " + full);
    } else if (section == "target") {
      if (key == "box") cfg.target = parse_box(value, line_no);
      else throw ConfigError(line_no, "unknown key " + full);
    } else if (section == "noise") {
      if (key == "kind") {
        if (value == "uniform") cfg.noise = NoiseKind::uniform;
        else if (value == "truncated-gaussian") cfg.noise = NoiseKind::truncated_gaussian;
        else throw ConfigError(line_no, "noise kind must be uniform or truncated-gaussian");
      } else if (key == "over") cfg.noise_over = parse_box(value, line_no);
      else if (key == "under") cfg.noise_under = parse_box(value, line_no);
      else throw ConfigError(line_no, "unknown key " + full);
    } else if (section == "solver") {
      if (key == "warm_start") cfg.warm_start = parse_bool(value, line_no);
      else if (key == "compute") {
        const auto c = parse_compute(value);
        if (!c) throw ConfigError(line_no, "compute must be one of under, over, both, worst-case, losing");
        cfg.compute = *c;
      } else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_count(value, line_no));
      else throw ConfigError(line_no, "unknown key " + full);
    } else {
      if (key == "trials") cfg.trials = parse_count(value, line_no);
      else if (key == "horizon") cfg.horizon = parse_count(value, line_no);
      else if (key == "seed") cfg.seed = parse_count(value, line_no);
      else throw ConfigError(line_no, "unknown key " + full);
    }
  }

  auto need = [&](const char* k) {
    if (!seen.count(k)) throw ConfigError(0, std::string("missing required key ") + k);
  };
  need("system.name");
  need("grid.region");
  need("grid.widths");
  need("target.box");
  const std::size_t n = cfg.region.dim();
  if (cfg.widths.size() != n) throw ConfigError(where["grid.widths"], "grid.widths needs " + std::to_string(n) + " entries");
  if (cfg.periodic.empty()) cfg.periodic.assign(n, false);
  if (cfg.periodic.size() != n) throw ConfigError(where["grid.periodic"], "grid.periodic needs " + std::to_string(n) + " entries");
  for (const Box& o : cfg.obstacles) {
    if (o.dim() != n) throw ConfigError(where["grid.obstacle"], "obstacle dimension differs from the region");
  }
  if (cfg.target.dim() != n) throw ConfigError(where["target.box"], "target dimension differs from the region");
  if (!cfg.region.contains(cfg.target)) throw ConfigError(where["target.box"], "target box is not inside the region");
  if (cfg.noise_over && cfg.noise_over->dim() != n) throw ConfigError(where["noise.over"], "noise.over dimension differs from the region");
  if (cfg.noise_under && cfg.noise_under->dim() != n) throw ConfigError(where["noise.under"], "noise.under dimension differs from the region");
  return cfg;
}

/// The model named in the config with its noise settings applied.
inline System make_system(const ProblemConfig& cfg) {
  static const std::map<std::string, std::set<std::string>> known{
      {"vanderpol", {"tau", "noise"}}, {"dubins", {"tau", "V", "inputs", "noise"}}, {"chain-ex43", {}}, {"chain-ex52", {}}};
  if (auto it = known.find(cfg.system); it != known.end()) {
    for (const auto& [k, v] : cfg.params) {
      if (!it->second.count(k)) throw ConfigError(0, "system " + cfg.system + " has no parameter " + k);
    }
  }
  System sys = builtin_system(cfg.system, cfg.params);
  if (auto* m = std::get_if<SystemModel>(&sys)) {
    if (m->dim != cfg.region.dim()) {
      throw ConfigError(0, "system " + cfg.system + " has dimension " + std::to_string(m->dim) + " but the region has " +
                               std::to_string(cfg.region.dim()));
    }
    m->noise = cfg.noise;
    if (cfg.noise_over) m->noise_over = *cfg.noise_over;
    if (cfg.noise_under) m->noise_under = *cfg.noise_under;
    m->validate();
  } else if (cfg.region.dim() != 1) {
    throw ConfigError(0, "chain systems are one-dimensional");
  }
  return sys;
}

inline Grid make_grid(const ProblemConfig& cfg) {
  return build_grid(cfg.region, cfg.widths, cfg.periodic, cfg.obstacles);
}

}  // namespace sbsynth
