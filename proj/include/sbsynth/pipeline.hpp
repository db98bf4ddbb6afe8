#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "sbsynth/abstraction.hpp"
#include "sbsynth/config.hpp"
#include "sbsynth/io.hpp"
#include "sbsynth/solver.hpp"

namespace sbsynth {

/// Everything produced by one synthesis run. Sets that were not requested are
/// left empty (nullopt).
struct SynthResult {
  Grid grid;
  System system;
  TransitionSystem ts;
  TargetSets target;
  std::optional<AbstractSet> over, under, worst_case, losing;
  std::optional<Controller> controller;
  double seconds_abstraction = 0.0, seconds_over = 0.0, seconds_under = 0.0, seconds_worst = 0.0;
  FixpointStats stats_over, stats_under;

  /// λ(W̲)/λ(W̄), or nullopt when either is missing or W̄ is empty.
  std::optional<double> ratio() const {
    if (!over || !under) return std::nullopt;
    const double vo = volume(grid, *over & grid.working_cells());
    if (vo == 0.0) return std::nullopt;
    return volume(grid, *under & grid.working_cells()) / vo;
  }
};

namespace detail {

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Builds the abstraction and runs the fixed points selected by
/// `cfg.compute`: `both` gives W̄, W̲ with its controller, the worst-case region
/// and L̄; `under` also computes W̄ when warm starting from it; `losing` needs W̲.
inline SynthResult run_synth(const ProblemConfig& cfg) {
  SynthResult r;
  r.grid = make_grid(cfg);
  r.system = make_system(cfg);
  r.seconds_abstraction = detail::timed([&] { r.ts = build_abstraction(r.system, r.grid, {cfg.threads}); });
  r.target = target_sets(r.grid, cfg.target);
  const ComputeSet c = cfg.compute;
  const bool want_under = c == ComputeSet::under || c == ComputeSet::both || c == ComputeSet::losing;
  const bool want_over = c == ComputeSet::over || c == ComputeSet::both || (want_under && cfg.warm_start);
  if (want_over) {
    r.seconds_over = detail::timed([&] {
      auto o = buchi_over(r.ts, r.target.over);
      r.over = std::move(o.set);
      r.stats_over = o.stats;
    });
  }
  if (want_under) {
    r.seconds_under = detail::timed([&] {
      auto u = buchi_under(r.ts, r.target.under, cfg.warm_start ? r.over : std::nullopt);
      r.under = std::move(u.winning);
      r.controller = std::move(u.controller);
      r.stats_under = u.stats;
    });
  }
  if (c == ComputeSet::worst_case || c == ComputeSet::both) {
    r.seconds_worst = detail::timed([&] { r.worst_case = worst_case_buchi(r.ts, r.target.under).set; });
  }
  if (r.under && (c == ComputeSet::losing || c == ComputeSet::both)) {
    r.losing = losing_over(r.ts, *r.under).set & r.grid.working_cells();
  }
  return r;
}

/// Key = value report of sizes, volumes, ratio and per-phase timings.
inline std::string format_report(const ProblemConfig& cfg, const SynthResult& r) {
  std::string out;
  auto kv = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  kv("system", cfg.system);
  kv("cells", std::to_string(r.grid.cell_count()));
  kv("inputs", std::to_string(r.ts.inputs()));
  kv("over_edges", std::to_string(r.ts.over_edges()));
  kv("under_edges", std::to_string(r.ts.under_edges()));
  kv("target_under_cells", std::to_string(r.target.under.size()));
  kv("target_over_cells", std::to_string(r.target.over.size()));
  kv("warm_start", cfg.warm_start ? "true" : "false");
  kv("compute", to_string(cfg.compute));
  auto region = [&](const char* name, const std::optional<AbstractSet>& s) {
    if (!s) return;
    const AbstractSet w = *s & r.grid.working_cells();
    kv(std::string(name) + "_cells", std::to_string(w.size()));
    kv(std::string(name) + "_volume", format_double(volume(r.grid, w)));
  };
  region("over", r.over);
  region("under", r.under);
  region("worst_case", r.worst_case);
  region("losing", r.losing);
  if (auto q = r.ratio()) kv("ratio", format_double(*q));
  kv("seconds_abstraction", format_double(r.seconds_abstraction));
  if (r.over) kv("seconds_over", format_double(r.seconds_over));
  if (r.under) kv("seconds_under", format_double(r.seconds_under));
  if (r.worst_case) kv("seconds_worst_case", format_double(r.seconds_worst));
  return out;
}

/// Writes region files, the controller and the report into `dir`.
inline void write_synth_outputs(const std::filesystem::path& dir, const ProblemConfig& cfg, const SynthResult& r) {
  std::filesystem::create_directories(dir);
  auto region = [&](const char* file, const std::optional<AbstractSet>& s) {
    if (s) write_file_atomic(dir / file, format_region(r.grid, *s));
  };
  region("w_over.region", r.over);
  region("w_under.region", r.under);
  region("worst_case.region", r.worst_case);
  region("losing.region", r.losing);
  if (r.controller) write_file_atomic(dir / "controller.txt", format_controller(r.grid, *r.controller));
  write_file_atomic(dir / "report.txt", format_report(cfg, r));
}

}  // namespace sbsynth
