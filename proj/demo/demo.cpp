// Small end-to-end run: template solve on a coarse grid, singleton composition over a
// 2x2 lattice, one filtered rollout to the origin.

#include <cstdio>
#include <memory>

#include "hjc/hjc.hpp"

int main() {
  using namespace hjc;
  const DubinsSystem sys = make_dubins();
  const Grid<3> grid = study::template_grid(51, 51, 36);
  SolveParams params;
  params.T = 1.0;
  params.dt = 0.05;
  auto tmpl = std::make_shared<const ValueField<3>>(solve_value(sys, study::template_cost(0.5, 1.0, 0.25), grid, params));
  std::printf("template: min V = %.4f, boundary layer max |V| = %.3g\n", tmpl->min_value(),
              tmpl->info.boundary_layer_max_abs);

  const auto clutter = study::clutter(sys, lattice_centers(5.0, 2, 2));
  const auto ev = ComposedEvaluator<3, 2>::singleton(tmpl, clutter);
  for (const auto& c : clutter.offsets)
    std::printf("copy at (%5.1f, %5.1f): composed value at its center = %.4f\n", c[0], c[1], ev(Vec<3>(c[0], c[1], 0.0)));

  RolloutConfig rc;
  const Trajectory tr = simulate(sys, ev, clutter, make_ball_obstacle<3>(0.5), rc, Vec<3>(-8.0, -7.5, 0.0));
  std::printf("rollout from (-8, -7.5, 0): %s after %zu steps, %.1f%% overridden\n", to_string(tr.outcome), tr.steps(),
              100.0 * tr.override_fraction());
  return tr.outcome == Outcome::reached_goal ? 0 : 1;
}
