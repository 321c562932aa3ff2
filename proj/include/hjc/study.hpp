#pragma once

// Helpers for the planar Dubins clutter setup shared by the CLI, the acceptance suite
// and the tests.

#include <random>
#include <vector>

#include "hjc/compose.hpp"
#include "hjc/dynamics.hpp"
#include "hjc/geometry.hpp"
#include "hjc/solver.hpp"

namespace hjc::study {

/// [-w, w]^2 x [-pi, pi) with the given node counts; heading is periodic.
inline Grid<3> template_grid(int nx, int ny, int ntheta, double half_width = 2.5) {
  return build_grid<3>({Axis{-half_width, half_width, nx, false}, Axis{-half_width, half_width, ny, false},
                        Axis{-kPi, kPi, ntheta, true}});
}

/// Same spacing as `g`, shifted by `shift` in the planar coordinates.
inline Grid<3> shifted_grid(const Grid<3>& g, const Vec<2>& shift) {
  auto axes = g.axes;
  for (int k = 0; k < 2; ++k) {
    axes[k].lower += shift[k];
    axes[k].upper += shift[k];
  }
  return build_grid<3>(axes);
}

inline RunningCost<3> template_cost(double radius, double kappa, double delta) {
  if (kappa == 0.0) return make_zero_cost<3>();
  return make_avoid_cost<3>(make_ball_obstacle<3>(radius), kappa, delta);
}

inline ClutterConfig<3, 2> clutter(const DubinsSystem& sys, const std::vector<Vec<2>>& offsets) {
  ClutterConfig<3, 2> c;
  c.embedding = sys.embedding;
  c.offsets = offsets;
  return c;
}

/// Planar box covering every copy's template ROI.
inline Box<2> clutter_window(const ClutterConfig<3, 2>& config, double half_width) {
  Box<2> b{Vec<2>::Constant(std::numeric_limits<double>::infinity()),
           Vec<2>::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& c : config.offsets) {
    b.lower = b.lower.cwiseMin(Vec<2>(c.array() - half_width));
    b.upper = b.upper.cwiseMax(Vec<2>(c.array() + half_width));
  }
  return b;
}

/// Uniform probes over a planar box and all headings, reproducible from `seed`.
inline std::vector<Vec<3>> uniform_probes(const Box<2>& box, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.lower[0], box.upper[0]);
  std::uniform_real_distribution<double> uy(box.lower[1], box.upper[1]);
  std::uniform_real_distribution<double> ut(-kPi, kPi);
  std::vector<Vec<3>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = ux(rng), y = uy(rng), t = ut(rng);
    out.emplace_back(x, y, t);
  }
  return out;
}

/// Largest planar distance from the origin of a template node with value < -epsilon.
inline double avoid_radius(const ValueField<3>& tmpl, double epsilon) {
  double r = 0.0;
  for (std::size_t i = 0; i < tmpl.values.size(); ++i)
    if (tmpl.values[i] < -epsilon) {
      const Vec<3> x = tmpl.grid.node(i);
      r = std::max(r, std::hypot(x[0], x[1]));
    }
  return r;
}

}  // namespace hjc::study
