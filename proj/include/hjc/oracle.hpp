#pragma once

#include <functional>
#include <limits>
#include <string>

#include "hjc/dynamics.hpp"
#include "hjc/geometry.hpp"
#include "hjc/solver.hpp"

namespace hjc {

/// Exhaustive enumeration over piecewise-constant control sequences of length `steps`.
struct OracleParams {
  double dt = 0.1;
  int steps = 4;
  double lambda = 0.0;
  /// Points sampled per step for collision checks and cost quadrature (>= 1; 1 samples
  /// step endpoints only).
  int sample_collision_substeps = 4;

  static constexpr double kBudget = 1e6;

  void validate(std::size_t n_controls) const {
    if (!(dt > 0.0)) throw InvalidParameter("OracleParams: dt must be positive");
    if (steps < 0) throw InvalidParameter("OracleParams: steps must be non-negative");
    if (sample_collision_substeps < 1) throw InvalidParameter("OracleParams: substeps must be >= 1");
    if (std::pow(static_cast<double>(n_controls), steps) > kBudget)
      throw BudgetExceeded("oracle: |U|^K = " + std::to_string(n_controls) + "^" + std::to_string(steps) +
                           " exceeds the enumeration limit of 1e6 sequences");
  }

  /// Matching solver parameters: same dt, horizon, discount and quadrature.
  SolveParams matched_solve_params() const {
    SolveParams p;
    p.dt = dt;
    p.T = dt * steps;
    p.lambda = lambda;
    p.quadrature_substeps = sample_collision_substeps;
    return p;
  }
};

namespace detail {

template <int N, int D, int M>
double oracle_value_rec(const ControlSystem<N, D, M>& sys, const RunningCost<N, M>& h, const Vec<N>& x, int k,
                        const OracleParams& p, double disc) {
  if (k == p.steps) return 0.0;
  const int S = p.sample_collision_substeps;
  const double sub = p.dt / S;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& u : sys.controls) {
    double q = h(k * p.dt, x, u);
    for (int j = 1; j < S; ++j) q += h(k * p.dt + j * sub, step(sys, x, u, j * sub), u);
    q *= sub;
    const double v = q + disc * oracle_value_rec(sys, h, step(sys, x, u, p.dt), k + 1, p, disc);
    if (v > best) best = v;
  }
  return best;
}

template <int N, int D, int M>
bool oracle_avoidable_rec(const ControlSystem<N, D, M>& sys, const std::function<bool(const Vec<N>&)>& region,
                          const Vec<N>& x, int k, const OracleParams& p) {
  if (k == p.steps) return true;
  if (region(x)) return false;
  const double sub = p.dt / p.sample_collision_substeps;
  for (const auto& u : sys.controls) {
    bool hit = false;
    for (int j = 1; j < p.sample_collision_substeps && !hit; ++j) hit = region(step(sys, x, u, j * sub));
    if (hit) continue;
    if (oracle_avoidable_rec(sys, region, step(sys, x, u, p.dt), k + 1, p)) return true;
  }
  return false;
}

}  // namespace detail

/// Max over all |U|^K sequences of sum_k exp(-lambda k dt) q_k, with q_k the running
/// cost integrated over step k at the sampled substep points.
template <int N, int D, int M>
double oracle_value(const ControlSystem<N, D, M>& sys, const RunningCost<N, M>& h, const Vec<N>& x,
                    const OracleParams& p) {
  p.validate(sys.controls.size());
  if (!x.allFinite()) throw InvalidState("oracle_value: non-finite state");
  return detail::oracle_value_rec(sys, h, sys.wrap(x), 0, p, std::exp(-p.lambda * p.dt));
}

/// True iff some sequence keeps every sampled point of [0, K dt) outside `region`.
template <int N, int D, int M>
bool oracle_avoidable(const ControlSystem<N, D, M>& sys, const std::function<bool(const Vec<N>&)>& region,
                      const Vec<N>& x, const OracleParams& p) {
  p.validate(sys.controls.size());
  if (!x.allFinite()) throw InvalidState("oracle_avoidable: non-finite state");
  return detail::oracle_avoidable_rec(sys, region, sys.wrap(x), 0, p);
}

template <int N, int D, int M>
bool oracle_avoidable(const ControlSystem<N, D, M>& sys, const Obstacle<N>& obstacle, const Vec<N>& x,
                      const OracleParams& p) {
  return oracle_avoidable(sys, std::function<bool(const Vec<N>&)>([&](const Vec<N>& y) { return obstacle.contains(y); }),
                          x, p);
}

}  // namespace hjc
