#include <gtest/gtest.h>

#include "hjc/compose.hpp"
#include "hjc/oracle.hpp"
#include "hjc/study.hpp"

using namespace hjc;

namespace {

const DubinsSystem kSys = make_dubins();

ValueField<3> solve(int n, int nt, double T, double dt, double kappa = 1.0, bool keep = false) {
  SolveParams p;
  p.T = T;
  p.dt = dt;
  p.keep_all_slices = keep;
  return solve_value(kSys, study::template_cost(0.5, kappa, 0.25), study::template_grid(n, n, nt), p);
}

// The full-resolution template is shared by several tests.
const ValueField<3>& default_template() {
  static const ValueField<3> f = solve(101, 72, 2.0, 0.02);
  return f;
}

}  // namespace

TEST(SolveParams, Validation) {
  SolveParams p;
  EXPECT_EQ(p.steps(), 100);
  p.dt = 0.03;
  EXPECT_THROW(p.steps(), InvalidParameter);
  p.dt = 0.0;
  EXPECT_THROW(p.steps(), InvalidParameter);
  p = SolveParams{};
  p.lambda = -1;
  EXPECT_THROW(p.steps(), InvalidParameter);
  p = SolveParams{};
  p.quadrature_substeps = 0;
  EXPECT_THROW(p.steps(), InvalidParameter);
}

TEST(SolveValue, ZeroCostGivesZeroEverywhere) {
  SolveParams p;
  p.T = 0.5;
  p.dt = 0.1;
  p.keep_all_slices = true;
  const auto f = solve_value(kSys, make_zero_cost<3>(), study::template_grid(21, 21, 12), p);
  ASSERT_EQ(f.slices.size(), 6u);
  for (const auto& s : f.slices)
    for (double v : s) EXPECT_EQ(v, 0.0);
  for (double v : f.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(f.info.solver, "grid-dp");
}

TEST(SolveValue, TemplateCenterIsNegative) {
  const auto& f = default_template();
  for (int k = 0; k < 72; ++k) {
    const double th = f.grid.axes[2].node(k);
    EXPECT_LT(interpolate(f, Vec<3>(0, 0, th)), 0.0);
  }
  EXPECT_EQ(f.info.steps, 100);
  EXPECT_LE(f.info.boundary_layer_max_abs, 1e-6 * 1.0 * 2.0);
}

TEST(SolveValue, NonPositiveAndBounded) {
  const auto& f = default_template();
  EXPECT_LE(f.info.max_overshoot, 1e-9);
  for (double v : f.values) {
    EXPECT_LE(v, 0.0);
    EXPECT_GE(v, -1.0 * 2.0);
  }
}

TEST(SolveValue, ZeroBeyondReach) {
  const auto& f = default_template();
  std::size_t checked = 0;
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    const Vec<3> x = f.grid.node(i);
    if (std::hypot(x[0], x[1]) > 0.5 + 1.0 * 2.0 + 1e-6) {
      EXPECT_EQ(f.values[i], 0.0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(SolveValue, ZeroBeyondReachShortHorizon) {
  const auto f = solve(51, 36, 1.0, 0.05);
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    const Vec<3> x = f.grid.node(i);
    if (std::hypot(x[0], x[1]) > 0.5 + 1.0 + 1e-6) EXPECT_EQ(f.values[i], 0.0);
  }
}

TEST(SolveValue, MonotoneInHorizon) {
  const auto f1 = solve(51, 36, 1.0, 0.05);
  const auto f2 = solve(51, 36, 2.0, 0.05);
  for (std::size_t i = 0; i < f1.values.size(); ++i) EXPECT_LE(f2.values[i], f1.values[i] + 1e-12);
}

TEST(SolveValue, KeepsAllSlicesOrdered) {
  const auto f = solve(21, 12, 0.4, 0.1, 1.0, true);
  ASSERT_EQ(f.slices.size(), 5u);
  EXPECT_EQ(f.slices.front(), f.values);
  for (double v : f.slices.back()) EXPECT_EQ(v, 0.0);
  // Less time to go, less accrued cost.
  for (std::size_t k = 0; k + 1 < f.slices.size(); ++k)
    for (std::size_t i = 0; i < f.values.size(); ++i) EXPECT_LE(f.slices[k][i], f.slices[k + 1][i] + 1e-12);
}

TEST(SolveValue, MatchesOracleWithinDiscretization) {
  OracleParams op;
  op.dt = 0.1;
  op.steps = 4;
  const auto h = study::template_cost(0.5, 1.0, 0.25);
  const auto f = solve_value(kSys, h, study::template_grid(21, 21, 12), op.matched_solve_params());
  const double tol = discretization_tolerance(f, 1.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.grid.size(); ++i)
    worst = std::max(worst, std::abs(f.values[i] - oracle_value(kSys, h, f.grid.node(i), op)));
  EXPECT_LE(worst, tol);
}

TEST(SolveValue, UnavoidableNodesAreNegative) {
  // The scheme never reports zero where the matched oracle says the obstacle cannot be
  // avoided.
  OracleParams op;
  op.dt = 0.1;
  op.steps = 5;
  const auto obs = make_ball_obstacle<3>(0.5);
  const auto h = make_avoid_cost<3>(obs, 1.0, 0.25);
  const auto f = solve_value(kSys, h, study::template_grid(41, 41, 24), op.matched_solve_params());
  for (std::size_t i = 0; i < f.grid.size(); ++i)
    if (!oracle_avoidable(kSys, obs, f.grid.node(i), op)) EXPECT_LT(f.values[i], -1e-9) << "node " << i;
}

TEST(SolveValue, NonFiniteCostIsReported) {
  RunningCost<3> h = study::template_cost(0.5, 1.0, 0.25);
  h.evaluate = [](double, const Vec<3>& x, const Vec<1>&) { return x[0] > 1.0 ? std::nan("") : 0.0; };
  SolveParams p;
  p.T = 0.1;
  p.dt = 0.1;
  p.reach_cutoff = false;
  try {
    solve_value(kSys, h, study::template_grid(11, 11, 4), p);
    FAIL() << "expected InvalidState";
  } catch (const InvalidState& e) {
    EXPECT_NE(std::string(e.what()).find("node"), std::string::npos);
  }
}

TEST(SolveValue, WarnsWhenObstacleEscapesGrid) {
  SolveParams p;
  p.T = 0.1;
  p.dt = 0.1;
  const auto f = solve_value(kSys, study::template_cost(0.5, 1.0, 0.25),
                             build_grid<3>({Axis{0.0, 2.0, 11, false}, Axis{-2.0, 2.0, 11, false}, Axis{-kPi, kPi, 8, true}}),
                             p);
  EXPECT_FALSE(f.info.warnings.empty());
}

TEST(SolveValue, DiscountShrinksMagnitude) {
  SolveParams p;
  p.T = 1.0;
  p.dt = 0.1;
  const auto g = study::template_grid(21, 21, 12);
  const auto h = study::template_cost(0.5, 1.0, 0.25);
  const auto f0 = solve_value(kSys, h, g, p);
  p.lambda = 2.0;
  const auto f1 = solve_value(kSys, h, g, p);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_GE(f1.values[i], f0.values[i] - 1e-12);
}

TEST(SolveValue, CutoffAgreesWithPlainSweepOnReachableNodes) {
  SolveParams p;
  p.T = 1.0;
  p.dt = 0.1;
  const auto g = study::template_grid(31, 31, 12);
  const auto h = study::template_cost(0.5, 1.0, 0.25);
  const auto with = solve_value(kSys, h, g, p);
  p.reach_cutoff = false;
  const auto without = solve_value(kSys, h, g, p);
  EXPECT_TRUE(with.info.reach_cutoff);
  EXPECT_FALSE(without.info.reach_cutoff);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_GE(with.values[i], without.values[i]);
    const Vec<3> x = g.node(i);
    if (std::hypot(x[0], x[1]) <= 0.5) EXPECT_NEAR(with.values[i], without.values[i], 0.05);
  }
}

TEST(AvoidMask, Examples) {
  ValueField<3> zero;
  zero.grid = study::template_grid(5, 5, 4);
  zero.values.assign(zero.grid.size(), 0.0);
  for (bool b : extract_avoid_mask(zero, 1e-6)) EXPECT_FALSE(b);
  EXPECT_THROW(extract_avoid_mask(zero, 0.0), InvalidParameter);

  const auto& f = default_template();
  const auto mask = extract_avoid_mask(f, 2e-6);
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    const Vec<3> x = f.grid.node(i);
    if (std::hypot(x[0], x[1]) < 0.5 - 1e-9) EXPECT_TRUE(mask[i]) << x.transpose();
  }
  const double big = -f.min_value() + 1.0;
  for (bool b : extract_avoid_mask(f, big)) EXPECT_FALSE(b);
}

TEST(Lipschitz, LinearField) {
  ValueField<1> f;
  f.grid = build_grid<1>({Axis{0.0, 1.0, 11, false}});
  for (int k = 0; k < 11; ++k) f.values.push_back(-0.3 * k * 0.1);
  EXPECT_NEAR(estimate_lipschitz(f), 0.3, 1e-12);
}
