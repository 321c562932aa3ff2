#include <gtest/gtest.h>

#include <random>

#include "hjc/config.hpp"
#include "hjc/io.hpp"
#include "hjc/study.hpp"

using namespace hjc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("hjc_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const char* kMinimal = R"({"system": "dubins", "solver": {"T": 2.0}})";

std::string expect_config_error(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected ConfigError for " << text;
  return "";
}

}  // namespace

TEST(Float64, EncodingIsLittleEndian) {
  const std::string bytes = io::encode_f64({1.0});
  ASSERT_EQ(bytes.size(), 8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 0xf0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 0x00);
  EXPECT_THROW(io::decode_f64("abc"), io::IoError);
}

TEST(ValueFieldIo, RoundTripIsBitExact) {
  const auto sys = make_dubins();
  SolveParams p;
  p.T = 0.5;
  p.dt = 0.1;
  const auto f = solve_value(sys, study::template_cost(0.5, 1.0, 0.25), study::template_grid(21, 17, 12), p);
  const auto dir = scratch_dir("roundtrip");
  io::write_value_field(f, dir, "field", {{"note", "test"}});
  const auto g = io::read_value_field<3>(dir / "field.json");
  ASSERT_EQ(g.values.size(), f.values.size());
  EXPECT_EQ(std::memcmp(g.values.data(), f.values.data(), f.values.size() * sizeof(double)), 0);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(g.grid.axes[k].lower, f.grid.axes[k].lower);
    EXPECT_EQ(g.grid.axes[k].upper, f.grid.axes[k].upper);
    EXPECT_EQ(g.grid.axes[k].count, f.grid.axes[k].count);
    EXPECT_EQ(g.grid.axes[k].periodic, f.grid.axes[k].periodic);
  }
  EXPECT_EQ(g.info.steps, f.info.steps);
  EXPECT_EQ(g.info.solver, "grid-dp");
  EXPECT_EQ(g.horizon, 0.5);
  const auto header = io::json::parse(io::read_file(dir / "field.json"));
  EXPECT_EQ(header["dtype"], "float64-le");
  EXPECT_EQ(header["order"], "row-major");
  EXPECT_EQ(header["metadata"]["note"], "test");
  EXPECT_EQ(fs::file_size(dir / "field.f64"), f.values.size() * 8);
  fs::remove_all(dir);
}

TEST(ValueFieldIo, RejectsTruncatedPayload) {
  ValueField<1> f;
  f.grid = build_grid<1>({Axis{0, 1, 4, false}});
  f.values = {0, -1, -2, -3};
  const auto dir = scratch_dir("truncated");
  io::write_value_field(f, dir, "v");
  io::write_file_atomic(dir / "v.f64", io::encode_f64({0, -1}));
  EXPECT_THROW(io::read_value_field<1>(dir / "v.json"), io::IoError);
  EXPECT_THROW(io::read_value_field<1>(dir / "missing.json"), io::IoError);
  fs::remove_all(dir);
}

TEST(ClutterIo, RoundTrip) {
  const auto sys = make_dubins();
  const auto c = study::clutter(sys, lattice_centers(5.0, 2, 3));
  const auto back = io::clutter_from_json<3, 2>(io::clutter_to_json(c));
  EXPECT_EQ(back.offsets, c.offsets);
  EXPECT_EQ(back.embedding, c.embedding);
}

TEST(PartitionIo, OneBasedOnDisk) {
  const Partition p{{{0, 2}, {1}}};
  const auto j = io::partition_to_json(p);
  EXPECT_EQ(j.dump(), "[[1,3],[2]]");
  EXPECT_EQ(io::partition_from_json(j, 3).blocks, p.blocks);
  EXPECT_THROW(io::partition_from_json(io::json::parse("[[0,1]]"), 2), io::IoError);
  EXPECT_THROW(io::partition_from_json(io::json::parse("[[1],[1,2]]"), 2), InvalidParameter);
}

TEST(SliceCsv, LayoutAndHeader) {
  io::SliceWindow w;
  w.x_lower = 0, w.x_upper = 1, w.nx = 3;
  w.y_lower = -1, w.y_upper = 1, w.ny = 2;
  const std::string csv = io::slice_csv([](const Vec<3>& x) { return -x[0] - 10 * x[2]; }, w, 0.5);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,value");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "0,-1,-5");
  EXPECT_EQ(rows[1], "0.5,-1,-5.5");
  EXPECT_EQ(rows[3], "0,1,-5");
}

TEST(TrajectoryCsv, TerminalRowLeavesControlEmpty) {
  Trajectory tr;
  tr.dt = 0.5;
  tr.states = {Vec<3>(0, 0, 0), Vec<3>(0.5, 0, 0.5)};
  tr.controls = {1.0};
  tr.overridden = {true};
  tr.composed_values = {0.0, -0.25};
  tr.outcome = Outcome::timed_out;
  const std::string csv = io::trajectory_csv(tr);
  EXPECT_EQ(csv, "t,x,y,theta,u,overridden,composed_value\n0,0,0,0,1,1,0\n0.5,0.5,0,0.5,,,-0.25\n");
  const auto s = io::trajectory_summary(tr);
  EXPECT_EQ(s["outcome"], "timed-out");
  EXPECT_EQ(s["steps"], 1);
  EXPECT_EQ(s["override_fraction"], 1.0);
}

TEST(RunConfig, MinimalDefaults) {
  const auto c = parse_run_config(kMinimal);
  EXPECT_EQ(c.system, "dubins");
  EXPECT_EQ(c.radius, 0.5);
  EXPECT_EQ(c.kappa, 1.0);
  EXPECT_EQ(c.delta, 0.25);
  EXPECT_EQ(c.solve.T, 2.0);
  EXPECT_EQ(c.solve.dt, 0.02);
  EXPECT_EQ(c.grid_counts, (std::array<int, 3>{101, 101, 72}));
  EXPECT_EQ(c.offsets.size(), 100u);
  EXPECT_EQ(c.offsets.front(), Vec<2>(-22.5, -22.5));
  EXPECT_EQ(c.seeds.size(), 20u);
  EXPECT_NEAR(c.epsilon(), 2e-6, 1e-18);
  EXPECT_EQ(std::get<std::string>(c.partition), "singleton");
}

TEST(RunConfig, MissingHorizonNamesKey) {
  const std::string msg = expect_config_error(R"({"system": "dubins", "solver": {"dt": 0.02}})");
  EXPECT_NE(msg.find("solver.T"), std::string::npos) << msg;
}

TEST(RunConfig, RejectsUnknownKeys) {
  EXPECT_NE(expect_config_error(R"({"system": "dubins", "solver": {"T": 2}, "colour": 1})").find("colour"),
            std::string::npos);
  EXPECT_NE(expect_config_error(R"({"system": "dubins", "solver": {"T": 2, "dx": 1}})").find("solver.dx"),
            std::string::npos);
  EXPECT_NE(expect_config_error(R"({"system": "dubins", "solver": {"T": 2}, "rollout": {"speed": 1}})")
                .find("rollout.speed"),
            std::string::npos);
}

TEST(RunConfig, ParseErrorReportsLine) {
  const std::string msg = expect_config_error("{\n  \"system\": \"dubins\",\n  \"solver\": {\"T\": }\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(RunConfig, ValidatesValues) {
  expect_config_error(R"({"system": "unicycle", "solver": {"T": 2}})");
  expect_config_error(R"({"system": "dubins", "solver": {"T": 2, "dt": 0.03}})");
  expect_config_error(R"({"system": "dubins", "solver": {"T": 2}, "obstacle": {"radius": -1}})");
  expect_config_error(R"({"system": "dubins", "solver": {"T": 2}, "partition": "pairs"})");
  expect_config_error(R"({"system": "dubins", "solver": {"T": 2}, "partition": [[1]], "clutter": {"offsets": [[0,0],[1,1]]}})");
  expect_config_error(R"({"system": "dubins", "solver": {"T": "two"}})");
  expect_config_error(R"({"system": "dubins", "solver": {"T": 2}, "clutter": {"offsets": []}})");
  expect_config_error(R"({"system": "dubins", "solver": {"T": 2}, "rollout": {"max_steps": 0}})");
}

TEST(RunConfig, ExplicitValues) {
  const auto c = parse_run_config(R"({
    "system": "dubins",
    "obstacle": {"radius": 0.4, "kappa": 0, "delta": 0.1},
    "solver": {"T": 1.0, "dt": 0.05, "grid_counts": [31, 41, 24]},
    "clutter": {"offsets": [[0, 0], [2, 1], [4, 0]]},
    "partition": [[1, 3], [2]],
    "rollout": {"seeds": [[1, 2, 0.5]], "goal_radius": 1.0},
    "verify": {"probes": 123, "epsilon": 1e-5},
    "output_dir": "somewhere",
    "seed": 42
  })");
  EXPECT_EQ(c.kappa, 0.0);
  EXPECT_EQ(c.grid_counts, (std::array<int, 3>{31, 41, 24}));
  EXPECT_EQ(std::get<Partition>(c.partition).blocks, (std::vector<std::vector<std::size_t>>{{0, 2}, {1}}));
  ASSERT_EQ(c.seeds.size(), 1u);
  EXPECT_EQ(c.seeds[0], Vec<3>(1, 2, 0.5));
  EXPECT_EQ(c.rollout.goal_radius, 1.0);
  EXPECT_EQ(c.verify.probes, 123);
  EXPECT_EQ(c.epsilon(), 1e-5);
  EXPECT_EQ(c.output_dir, "somewhere");
  EXPECT_EQ(c.seed, 42u);
}

TEST(Probes, ReproducibleFromSeed) {
  const Box<2> b{Vec<2>(-1, -2), Vec<2>(3, 4)};
  const auto a = study::uniform_probes(b, 100, 9);
  const auto c = study::uniform_probes(b, 100, 9);
  const auto d = study::uniform_probes(b, 100, 10);
  EXPECT_EQ(a, c);
  EXPECT_NE(a, d);
  for (const auto& x : a) {
    EXPECT_TRUE(b.contains(Vec<2>(x[0], x[1])));
    EXPECT_GE(x[2], -kPi);
    EXPECT_LT(x[2], kPi);
  }
}

TEST(AtomicWrite, LeavesNoTempFile) {
  const auto dir = scratch_dir("atomic");
  io::write_file_atomic(dir / "a.txt", "hello");
  EXPECT_EQ(io::read_file(dir / "a.txt"), "hello");
  EXPECT_FALSE(fs::exists(dir / "a.txt.tmp"));
  fs::remove_all(dir);
}
