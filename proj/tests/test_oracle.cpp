#include <gtest/gtest.h>

#include <random>

#include "hjc/oracle.hpp"
#include "hjc/study.hpp"

using namespace hjc;

namespace {

const DubinsSystem kSys = make_dubins();

Vec<3> arc(const Vec<3>& x0, double u, double t) {
  const double th = x0[2];
  return Vec<3>(x0[0] + (std::sin(th + u * t) - std::sin(th)) / u, x0[1] - (std::cos(th + u * t) - std::cos(th)) / u,
                th + u * t);
}

// Independent enumeration over closed-form arcs: true iff some sequence keeps all
// sampled points of [0, K dt) outside the disc of radius r at the origin.
bool arc_avoidable(const Vec<3>& x, int K, double dt, int S, double r) {
  for (int code = 0; code < (1 << K); ++code) {
    Vec<3> s = x;
    bool hit = false;
    for (int k = 0; k < K && !hit; ++k) {
      const double u = (code >> (K - 1 - k)) & 1 ? 1.0 : -1.0;
      for (int j = 0; j < S && !hit; ++j) {
        const Vec<3> p = arc(s, u, j * dt / S);
        hit = std::hypot(p[0], p[1]) < r;
      }
      s = arc(s, u, dt);
    }
    if (!hit) return true;
  }
  return false;
}

std::vector<Vec<3>> probes(int n, double half, std::uint64_t seed) {
  return study::uniform_probes(Box<2>{Vec<2>(-half, -half), Vec<2>(half, half)}, static_cast<std::size_t>(n), seed);
}

}  // namespace

TEST(OracleValue, ZeroCost) {
  OracleParams p;
  for (const auto& x : probes(50, 3.0, 1)) EXPECT_EQ(oracle_value(kSys, make_zero_cost<3>(), x, p), 0.0);
}

TEST(OracleValue, DeepInsideAccruesFullCost) {
  OracleParams p;
  p.dt = 0.1;
  p.steps = 2;
  const auto h = study::template_cost(0.5, 1.0, 0.25);
  // Within 0.2 of the center the margin stays >= 0.3 > delta, so every sample costs -1.
  const double v = oracle_value(kSys, h, Vec<3>(0, 0, 0.4), p);
  EXPECT_LT(v, 0.0);
  EXPECT_NEAR(v, -0.2, 1e-12);
}

TEST(OracleValue, DiscountedSum) {
  OracleParams p;
  p.dt = 0.05;
  p.steps = 3;
  p.lambda = 1.0;
  const auto h = study::template_cost(0.5, 1.0, 0.25);
  // Path length 0.15 keeps the margin above delta.
  const double g = std::exp(-0.05);
  EXPECT_NEAR(oracle_value(kSys, h, Vec<3>(0, 0, 0), p), -0.05 * (1 + g + g * g), 1e-12);
}

TEST(OracleValue, BudgetEnforced) {
  OracleParams p;
  p.steps = 20;
  EXPECT_THROW(oracle_value(kSys, make_zero_cost<3>(), Vec<3>(0, 0, 0), p), BudgetExceeded);
  p.steps = 19;
  EXPECT_NO_THROW(p.validate(2));
  p.dt = 0.0;
  EXPECT_THROW(p.validate(2), InvalidParameter);
}

TEST(OracleAvoidable, Examples) {
  OracleParams p;
  p.dt = 0.1;
  p.steps = 5;
  const auto obs = make_ball_obstacle<3>(0.5);
  EXPECT_FALSE(oracle_avoidable(kSys, obs, Vec<3>(0.1, 0.1, 2.0), p));
  EXPECT_TRUE(oracle_avoidable(kSys, obs, Vec<3>(0.5 + 0.5 + 0.01, 0, kPi), p));
  const Vec<3> ahead(-0.55, 0, 0);
  EXPECT_EQ(oracle_avoidable(kSys, obs, ahead, p), arc_avoidable(ahead, 5, 0.1, 4, 0.5));
}

TEST(OracleAvoidable, MatchesArcEnumeration) {
  OracleParams p;
  p.dt = 0.1;
  p.steps = 5;
  const auto obs = make_ball_obstacle<3>(0.5);
  int disagreements = 0;
  for (const auto& x : probes(400, 1.2, 2))
    disagreements += oracle_avoidable(kSys, obs, x, p) != arc_avoidable(x, 5, 0.1, 4, 0.5);
  EXPECT_EQ(disagreements, 0);
}

TEST(OracleAvoidable, ConsistentWithValueSign) {
  OracleParams p;
  p.dt = 0.1;
  p.steps = 5;
  const auto obs = make_ball_obstacle<3>(0.5);
  const auto h = make_avoid_cost<3>(obs, 1.0, 0.25);
  for (const auto& x : probes(300, 1.3, 3)) {
    const bool av = oracle_avoidable(kSys, obs, x, p);
    const double v = oracle_value(kSys, h, x, p);
    if (av) EXPECT_EQ(v, 0.0);
    else EXPECT_LT(v, 0.0);
  }
}

TEST(OracleAvoidable, MonotoneInHorizon) {
  const auto obs = make_ball_obstacle<3>(0.5);
  for (const auto& x : probes(200, 1.3, 4)) {
    for (int K = 1; K < 6; ++K) {
      OracleParams a, b;
      a.steps = K;
      b.steps = K + 1;
      if (oracle_avoidable(kSys, obs, x, b)) EXPECT_TRUE(oracle_avoidable(kSys, obs, x, a));
    }
  }
}

TEST(OracleValue, ClutterDominance) {
  OracleParams p;
  p.steps = 4;
  const auto h = study::template_cost(0.5, 1.0, 0.25);
  const std::vector<Vec<2>> offs{Vec<2>(-0.6, 0), Vec<2>(0.6, 0.1)};
  std::vector<RunningCost<3>> parts;
  for (const auto& c : offs) parts.push_back(translate_cost<3, 2, 1>(h, kSys.embedding, c));
  const auto hc = min_cost(parts);
  for (const auto& x : probes(100, 1.5, 5)) {
    const double vc = oracle_value(kSys, hc, x, p);
    for (const auto& hj : parts) EXPECT_LE(vc, oracle_value(kSys, hj, x, p));
  }
}

TEST(OracleValue, NonFiniteState) {
  OracleParams p;
  EXPECT_THROW(oracle_value(kSys, make_zero_cost<3>(), Vec<3>(std::nan(""), 0, 0), p), InvalidState);
  EXPECT_THROW(oracle_avoidable(kSys, make_ball_obstacle<3>(0.5), Vec<3>(std::nan(""), 0, 0), p), InvalidState);
}
