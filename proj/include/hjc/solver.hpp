#pragma once

#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "hjc/dynamics.hpp"
#include "hjc/geometry.hpp"
#include "hjc/grid.hpp"

namespace hjc {

struct SolveParams {
  double dt = 0.02;
  double T = 2.0;
  double lambda = 0.0;
  bool keep_all_slices = false;
  /// Running cost is averaged over this many equally spaced points along each step
  /// (1 = left-endpoint rectangle rule).
  int quadrature_substeps = 1;
  /// Pin nodes that cannot reach the cost support within the remaining horizon to 0.
  /// Needs a support with a known margin Lipschitz constant; ignored otherwise.
  bool reach_cutoff = true;

  int steps() const {
    if (!(dt > 0.0) || !(T > 0.0)) throw InvalidParameter("SolveParams: dt and T must be positive");
    if (!(lambda >= 0.0)) throw InvalidParameter("SolveParams: lambda must be non-negative");
    if (quadrature_substeps < 1) throw InvalidParameter("SolveParams: quadrature_substeps must be >= 1");
    const double k = std::round(T / dt);
    if (std::abs(k * dt - T) > 1e-9 * std::max(1.0, T)) throw InvalidParameter("SolveParams: dt must divide T");
    return static_cast<int>(k);
  }
};

/// Diagnostics recorded by solve_value and carried with the field.
struct SolveInfo {
  std::string solver = "grid-dp";
  double dt = 0.0;
  int steps = 0;
  int quadrature_substeps = 1;
  bool reach_cutoff = false;
  /// Largest node value seen before the per-sweep clamp to <= 0.
  double max_overshoot = 0.0;
  /// max |V| over nodes on non-periodic outer faces at t = 0; must be ~0 for
  /// extension by zero outside the grid to be sound.
  double boundary_layer_max_abs = 0.0;
  double cost_bound = 0.0;
  std::vector<std::string> warnings;
};

/// One time slice V(t, .) on a grid; evaluates to 0 outside the grid.
template <int N>
struct ValueField {
  Grid<N> grid;
  double time = 0.0;
  std::vector<double> values;
  double horizon = 0.0;
  double discount = 0.0;
  SolveInfo info;
  /// Slices at t_k = k dt, k = 0..steps, when requested.
  std::vector<std::vector<double>> slices;

  double operator()(const Vec<N>& x) const { return interpolate_values(grid, values, x); }
  double min_value() const { return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end()); }
  double max_value() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
};

template <int N>
double interpolate(const ValueField<N>& field, const Vec<N>& x) {
  return interpolate_values(field.grid, field.values, x);
}

namespace detail {

template <int N, int D, int M>
double step_cost(const ControlSystem<N, D, M>& sys, const RunningCost<N, M>& h, double t, const Vec<N>& x,
                 const Vec<M>& u, double dt, int substeps) {
  double acc = h(t, x, u);
  const double sub = dt / substeps;
  for (int j = 1; j < substeps; ++j) acc += h(t + j * sub, step(sys, x, u, j * sub), u);
  return acc * sub;
}

}  // namespace detail

/// Backward semi-Lagrangian recursion for the avoid travel-cost value:
///   V(T) = 0,
///   V(t_k, x_i) = max_u [ q(t_k, x_i, u) + exp(-lambda dt) * V(t_{k+1}, step(x_i, u, dt)) ],
/// where q is the running cost integrated over the step and V(t_{k+1}, .) is multilinear
/// with extension by zero. Each sweep is clamped to <= 0. Ties keep the first control.
/// With reach_cutoff, nodes farther from the cost support than max_speed * (T - t_k)
/// are set to 0, their exact value.
template <int N, int D, int M>
ValueField<N> solve_value(const ControlSystem<N, D, M>& sys, const RunningCost<N, M>& h, const Grid<N>& grid,
                          const SolveParams& params) {
  const int K = params.steps();
  const double dt = params.dt;
  const int S = params.quadrature_substeps;
  const double disc = std::exp(-params.lambda * dt);
  const std::size_t n_nodes = grid.size();
  const std::size_t n_u = sys.controls.size();
  if (n_u == 0) throw InvalidParameter("solve_value: empty control set");

  ValueField<N> field;
  field.grid = grid;
  field.horizon = params.T;
  field.discount = params.lambda;
  field.info.dt = dt;
  field.info.steps = K;
  field.info.quadrature_substeps = S;
  field.info.cost_bound = h.bound;
  const double lip = h.support.margin_lipschitz;
  const bool cutoff = params.reach_cutoff && lip > 0.0 && std::isfinite(sys.max_speed);
  field.info.reach_cutoff = cutoff;

  const auto& bb = h.support.bounding_box;
  for (int k = 0; k < N; ++k) {
    const Axis& a = grid.axes[k];
    if (a.periodic || !std::isfinite(bb.lower[k]) || !std::isfinite(bb.upper[k])) continue;
    if (bb.lower[k] <= a.lower || bb.upper[k] >= a.upper) {
      std::ostringstream os;
      os << "obstacle bounding box escapes grid interior along dimension " << k;
      field.info.warnings.push_back(os.str());
    }
  }

  // Stencils and (for time-invariant costs) step costs do not change between sweeps.
  std::vector<Stencil<N>> stencils(n_nodes * n_u);
  std::vector<double> costs(h.time_invariant ? n_nodes * n_u : 0);
  // Node i is exactly 0 while margin[i] + lip * v * (time to go) < -kReachSlack.
  constexpr double kReachSlack = 1e-9;
  std::vector<double> margin(cutoff ? n_nodes : 0);
  parallel_for(n_nodes, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Vec<N> x = grid.node(i);
      if (cutoff) margin[i] = h.support.signed_margin(x);
      for (std::size_t a = 0; a < n_u; ++a) {
        stencils[i * n_u + a] = make_stencil(grid, step(sys, x, sys.controls[a], dt));
        if (h.time_invariant) costs[i * n_u + a] = detail::step_cost(sys, h, 0.0, x, sys.controls[a], dt, S);
      }
    }
  });

  const auto strides = grid.strides();
  std::vector<double> next(n_nodes, 0.0);
  std::vector<double> cur(n_nodes, 0.0);
  if (params.keep_all_slices) {
    field.slices.assign(static_cast<std::size_t>(K) + 1, {});
    field.slices[static_cast<std::size_t>(K)] = next;
  }
  for (int k = K - 1; k >= 0; --k) {
    const double t = k * dt;
    const double reach = lip * sys.max_speed * (K - k) * dt;
    double sweep_max = -std::numeric_limits<double>::infinity();
    std::mutex merge;
    parallel_for(n_nodes, [&](std::size_t b, std::size_t e) {
      double local_max = -std::numeric_limits<double>::infinity();
      for (std::size_t i = b; i < e; ++i) {
        if (cutoff && margin[i] + reach < -kReachSlack) {
          cur[i] = 0.0;
          continue;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n_u; ++a) {
          const double q = h.time_invariant
                               ? costs[i * n_u + a]
                               : detail::step_cost(sys, h, t, grid.node(i), sys.controls[a], dt, S);
          const double v = q + disc * apply_stencil(next, stencils[i * n_u + a], strides.data());
          if (v > best) best = v;
        }
        if (!std::isfinite(best)) {
          std::ostringstream os;
          os << "solve_value: non-finite value at node " << i << " (" << grid.node(i).transpose() << ") step " << k;
          throw InvalidState(os.str());
        }
        local_max = std::max(local_max, best);
        cur[i] = std::min(best, 0.0);
      }
      std::lock_guard lock(merge);
      sweep_max = std::max(sweep_max, local_max);
    });
    field.info.max_overshoot = std::max(field.info.max_overshoot, sweep_max);
    std::swap(cur, next);
    if (params.keep_all_slices) field.slices[static_cast<std::size_t>(k)] = next;
  }

  field.values = std::move(next);
  field.time = 0.0;
  for (std::size_t i = 0; i < n_nodes; ++i)
    if (grid.on_boundary(i)) field.info.boundary_layer_max_abs = std::max(field.info.boundary_layer_max_abs, std::abs(field.values[i]));
  return field;
}

/// mask[i] = values[i] < -epsilon.
template <int N>
std::vector<bool> extract_avoid_mask(const ValueField<N>& field, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidParameter("extract_avoid_mask: epsilon must be positive");
  std::vector<bool> mask(field.values.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = field.values[i] < -epsilon;
  return mask;
}

/// Largest finite-difference slope between adjacent nodes, over all dimensions.
template <int N>
double estimate_lipschitz(const ValueField<N>& field) {
  const auto& g = field.grid;
  const auto strides = g.strides();
  double L = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unflatten(i);
    for (int k = 0; k < N; ++k) {
      const Axis& a = g.axes[k];
      std::size_t j;
      if (idx[k] + 1 < a.count) {
        j = i + strides[k];
      } else if (a.periodic) {
        j = i - static_cast<std::size_t>(idx[k]) * strides[k];
      } else {
        continue;
      }
      L = std::max(L, std::abs(field.values[j] - field.values[i]) / a.spacing());
    }
  }
  return L;
}

}  // namespace hjc
