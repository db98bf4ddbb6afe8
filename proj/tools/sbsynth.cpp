// Command-line front end: synth, simulate, volume, audit-fu.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sbsynth/abstraction.hpp"
#include "sbsynth/config.hpp"
#include "sbsynth/io.hpp"
#include "sbsynth/pipeline.hpp"
#include "sbsynth/simulate.hpp"

namespace fs = std::filesystem;
using namespace sbsynth;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ProblemConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  try {
    return parse_config(text);
  } catch (const ConfigError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

int cmd_synth(ProblemConfig cfg, const fs::path& out) {
  std::fprintf(stderr, "synth: %s, compute=%s\n", cfg.system.c_str(), to_string(cfg.compute));
  const SynthResult r = run_synth(cfg);
  write_synth_outputs(out, cfg, r);
  std::cout << format_report(cfg, r);
  return 0;
}

int cmd_simulate(const ProblemConfig& cfg, const fs::path& out, std::string controller_path, std::string region_path,
                 double s0) {
  fs::create_directories(out);
  const System sys = make_system(cfg);
  std::string stats;
  auto kv = [&](const std::string& k, const std::string& v) { stats += k + " = " + v + "\n"; };
  if (const auto* chain = std::get_if<FiniteCMP>(&sys)) {
    const SimStats st = simulate_chain(*chain, s0, cfg.horizon, cfg.trials, cfg.seed);
    kv("system", cfg.system);
    kv("s0", format_double(s0));
    kv("trials", std::to_string(st.trials));
    kv("horizon", std::to_string(st.horizon));
    kv("seed", std::to_string(st.seed));
    kv("fraction_trapped", format_double(st.fraction_trapped));
  } else {
    const auto& m = std::get<SystemModel>(sys);
    const Grid g = make_grid(cfg);
    if (controller_path.empty()) controller_path = (out / "controller.txt").string();
    if (region_path.empty()) region_path = (out / "w_under.region").string();
    const ControllerFile cf = parse_controller(read_file(controller_path));
    const RegionFile rf = parse_region(read_file(region_path));
    try {
      require_grid(cf.grid, g, controller_path);
      require_grid(rf.grid, g, region_path);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const Controller c = cf.to_controller(g.universe());
    const AbstractSet winning = rf.to_set(g.universe());
    std::vector<Trajectory> trajectories;
    const SimStats st = simulate_trials(m, refine(c, g), cfg.target, winning, cfg.trials, cfg.horizon, cfg.seed,
                                        &trajectories);
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "trajectory_%04zu.txt", i);
      write_file_atomic(out / name, format_trajectory(trajectories[i]));
    }
    std::size_t min_visits = st.target_visits.empty() ? 0 : st.target_visits.front();
    for (auto v : st.target_visits) min_visits = std::min(min_visits, v);
    kv("system", cfg.system);
    kv("trials", std::to_string(st.trials));
    kv("horizon", std::to_string(st.horizon));
    kv("seed", std::to_string(st.seed));
    kv("fraction_contained", format_double(st.fraction_contained));
    kv("sink_hits", std::to_string(st.sink_hits));
    kv("no_guarantee_trials", std::to_string(st.no_guarantee_trials));
    kv("min_target_visits", std::to_string(min_visits));
    std::string visits;
    for (auto v : st.target_visits) visits += (visits.empty() ? "" : " ") + std::to_string(v);
    kv("target_visits", visits);
  }
  write_file_atomic(out / "stats.txt", stats);
  std::cout << stats;
  return 0;
}

int cmd_volume(const std::vector<std::string>& files) {
  std::vector<double> vols;
  for (const auto& f : files) {
    const RegionFile r = parse_region(read_file(f));
    double cell = 1.0;
    for (double w : r.grid.widths) cell *= w;
    vols.push_back(static_cast<double>(r.cells.size()) * cell);
    std::cout << f << " cells = " << r.cells.size() << " volume = " << format_double(vols.back()) << "\n";
  }
  if (vols.size() == 2 && vols[1] > 0.0) std::cout << "ratio = " << format_double(vols[0] / vols[1]) << "\n";
  return 0;
}

int cmd_audit(const ProblemConfig& cfg, std::size_t edges, std::size_t points) {
  const Grid g = make_grid(cfg);
  const System sys = make_system(cfg);
  const TransitionSystem ts = build_abstraction(sys, g, {cfg.threads});
  const FuAuditReport rep = check_fu_alternative(sys, g, ts, edges, points, cfg.seed);
  std::cout << "edges_checked = " << rep.edges.size() << "\n"
            << "flagged = " << rep.flagged << "\n"
            << "min_mass = " << format_double(rep.edges.empty() ? 0.0 : rep.min_mass) << "\n";
  for (const auto& e : rep.edges) {
    if (e.min_mass <= 1e-12) std::cout << "zero-mass edge: cell " << e.cell << " input " << e.input << " -> " << e.successor << "\n";
  }
  return rep.flagged ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Almost-sure Büchi controller synthesis on grid abstractions"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out", compute;
  std::optional<std::uint64_t> seed;
  bool no_warm = false;

  auto common = [&](CLI::App* c, bool needs_out) {
    c->add_option("--config", config_path, "problem file")->required();
    if (needs_out) c->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
    c->add_option("--seed", seed, "overrides the seed in the problem file");
  };

  auto* synth = app.add_subcommand("synth", "build the abstraction and compute winning regions");
  common(synth, true);
  synth->add_flag("--no-warm-start", no_warm, "start W̲ from the full set instead of W̄");
  synth->add_option("--compute", compute, "under, over, both, worst-case or losing");

  std::string controller_path, region_path;
  double s0 = 0.5;
  auto* sim = app.add_subcommand("simulate", "closed-loop Monte-Carlo runs from W̲");
  common(sim, true);
  sim->add_option("--controller", controller_path, "controller file (default <out-dir>/controller.txt)");
  sim->add_option("--region", region_path, "start region (default <out-dir>/w_under.region)");
  sim->add_option("--s0", s0, "initial state for chain systems")->capture_default_str();

  std::vector<std::string> region_files;
  auto* vol = app.add_subcommand("volume", "volumes of region files; with two files, also their ratio");
  vol->add_option("files", region_files, "region files")->required();

  std::size_t edges = 2000, points = 64;
  auto* audit = app.add_subcommand("audit-fu", "sample F̲ edges and check their minimum one-step mass");
  common(audit, false);
  audit->add_option("--edges", edges, "edges to sample")->capture_default_str();
  audit->add_option("--points", points, "random states per edge")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*vol) return cmd_volume(region_files);
    ProblemConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (*synth) {
      if (no_warm) cfg.warm_start = false;
      if (!compute.empty()) {
        const auto c = parse_compute(compute);
        if (!c) throw UsageError("--compute must be one of under, over, both, worst-case, losing");
        cfg.compute = *c;
      }
      return cmd_synth(cfg, out_dir);
    }
    if (*sim) return cmd_simulate(cfg, out_dir, controller_path, region_path, s0);
    return cmd_audit(cfg, edges, points);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
