#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>
#include <random>

#include "sbsynth/io.hpp"
#include "support.hpp"

using namespace sbsynth;

namespace {

Grid odd_grid() {
  const double pi = std::numbers::pi;
  return build_grid(Box({0, 0, -pi}, {2, 3, pi}), {2.0 / 29, 3.0 / 43, 2 * pi / 90}, {false, false, true});
}

}  // namespace

TEST(RegionFile, FormatIsLineOriented) {
  const Grid g = build_grid(Box({0.0}, {2.0}), {1.0});
  AbstractSet s(g.universe());
  s.insert(1);
  s.insert(g.sink());
  EXPECT_EQ(format_region(g, s), "REGION v1\ndims=1 lo=0 hi=2 w=1 periodic=0\n1\nPHI\n");
}

TEST(RegionFile, RoundTripIsExact) {
  const Grid g = odd_grid();
  std::mt19937_64 rng(5);
  for (double density : {0.0, 0.01, 0.5, 1.0}) {
    AbstractSet s = testing_support::random_set(rng, g.universe(), density);
    const RegionFile r = parse_region(format_region(g, s));
    EXPECT_EQ(r.grid, GridSpec::of(g));
    EXPECT_EQ(r.to_set(g.universe()), s);
    EXPECT_EQ(r.has_sink, s.contains(g.sink()));
  }
}

TEST(ControllerFile, RoundTripIsExact) {
  const Grid g = odd_grid();
  std::mt19937_64 rng(6);
  Controller c(g.universe());
  std::uniform_int_distribution<std::size_t> input(0, 30);
  for (CellId q = 0; q < g.cell_count(); q += 7) c.assign(q, input(rng), ControlMode::sure_progress, 3);
  const ControllerFile f = parse_controller(format_controller(g, c));
  EXPECT_EQ(f.grid, GridSpec::of(g));
  EXPECT_EQ(f.to_controller(g.universe()), c);
}

TEST(RegionFile, ErrorsNameTheByteOffset) {
  const std::string head = "REGION v1\ndims=1 lo=0 hi=2 w=1 periodic=0\n";
  try {
    parse_region(head + "0\nbad\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), head.size() + 2);
    EXPECT_NE(std::string(e.what()).find("byte " + std::to_string(head.size() + 2)), std::string::npos);
  }
  EXPECT_THROW(parse_region("REGION v2\n"), ParseError);
  EXPECT_THROW(parse_region(head + "1\n0\n"), ParseError);     // not ascending
  EXPECT_THROW(parse_region(head + "2\n"), ParseError);        // outside the grid
  EXPECT_THROW(parse_region(head + "PHI\n0\n"), ParseError);   // sink must come last
  EXPECT_THROW(parse_region("REGION v1\ndims=1 lo=0 hi=2 w=1\n"), ParseError);
  try {
    parse_region("REGION v1\ndims=2 lo=0,0 hi=2,x w=1,1 periodic=0,0\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), std::string("REGION v1\ndims=2 lo=0,0 hi=2,").size());
  }
}

TEST(ControllerFile, RejectsMalformedLines) {
  const std::string head = "CONTROLLER v1\ndims=1 lo=0 hi=2 w=1 periodic=0\n";
  EXPECT_NO_THROW(parse_controller(head + "0 1\n1 0\n"));
  EXPECT_THROW(parse_controller(head + "0\n"), ParseError);
  EXPECT_THROW(parse_controller(head + "1 0\n0 0\n"), ParseError);
  EXPECT_THROW(parse_controller(head + "0 -1\n"), ParseError);
}

TEST(GridSpec, MismatchIsReported) {
  const Grid g = build_grid(Box({0.0}, {2.0}), {1.0});
  const Grid h = build_grid(Box({0.0}, {2.0}), {0.5});
  const RegionFile r = parse_region(format_region(g, AbstractSet(g.universe())));
  EXPECT_NO_THROW(require_grid(r.grid, g, "r"));
  EXPECT_THROW(require_grid(r.grid, h, "r"), std::invalid_argument);
}

TEST(TrajectoryFile, OneLinePerStep) {
  Trajectory tr;
  tr.steps.push_back({{0.1, -2.0}, 3, true, true, false, false});
  tr.steps.push_back({{1.0 / 3, 5.0}, std::nullopt, false, false, true, true});
  EXPECT_EQ(format_trajectory(tr), "0 0.10000000000000001 -2 3 BW\n1 0.33333333333333331 5 - PN\n");
  Trajectory plain;
  plain.steps.push_back({{0.5}, 0, false, false, false, false});
  EXPECT_EQ(format_trajectory(plain), "0 0.5 0 -\n");
}

TEST(Files, AtomicWriteReplacesContent) {
  const auto dir = std::filesystem::temp_directory_path() / "sbsynth_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "x.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second\n");
  EXPECT_EQ(read_file(path), "second\n");
  EXPECT_FALSE(std::filesystem::exists(dir / "x.txt.tmp"));
  EXPECT_THROW(read_file(dir / "missing.txt"), std::runtime_error);
  EXPECT_THROW(write_file_atomic(dir / "no" / "such" / "dir.txt", "x"), std::runtime_error);
  std::filesystem::remove_all(dir);
}
