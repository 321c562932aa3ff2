#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hjc/dynamics.hpp"
#include "hjc/geometry.hpp"

namespace hjc {

struct RolloutConfig {
  double dt = 0.05;
  int max_steps = 4000;
  Vec<2> goal_center = Vec<2>::Zero();
  double goal_radius = 0.5;
  /// Override when the predicted next-state value drops below this.
  double override_threshold = 0.0;
  /// Points checked per step for collisions (endpoint plus substeps - 1 interior points).
  int collision_substeps = 4;

  void validate() const {
    if (!(dt > 0.0)) throw InvalidParameter("RolloutConfig: dt must be positive");
    if (max_steps < 1) throw InvalidParameter("RolloutConfig: max_steps must be >= 1");
    if (!(goal_radius > 0.0)) throw InvalidParameter("RolloutConfig: goal_radius must be positive");
    if (collision_substeps < 1) throw InvalidParameter("RolloutConfig: collision_substeps must be >= 1");
  }
};

enum class Outcome { reached_goal, collided, timed_out, error };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::reached_goal: return "reached-goal";
    case Outcome::collided: return "collided";
    case Outcome::timed_out: return "timed-out";
    case Outcome::error: return "error";
  }
  return "?";
}

/// Closed-loop record. `states` and `composed_values` have one more entry than the
/// per-step `controls` and `overridden`.
struct Trajectory {
  double dt = 0.0;
  std::vector<Vec<3>> states;
  std::vector<double> controls;
  std::vector<bool> overridden;
  std::vector<double> composed_values;
  Outcome outcome = Outcome::timed_out;
  std::string message;

  std::size_t steps() const { return controls.size(); }
  double override_fraction() const {
    if (overridden.empty()) return 0.0;
    return static_cast<double>(std::count(overridden.begin(), overridden.end(), true)) / overridden.size();
  }
};

/// Bang-bang steering toward the goal: sign of the heading error wrapped to (-pi, pi],
/// +1 when the error is exactly zero.
inline double nominal_control(const Vec<3>& x, const Vec<2>& goal) {
  const double psi = std::atan2(goal[1] - x[1], goal[0] - x[0]);
  double e = wrap_angle(psi - x[2]);
  if (e == -kPi) e = kPi;
  return e < 0.0 ? -1.0 : 1.0;
}

struct FilterDecision {
  double control = 0.0;
  bool overridden = false;
};

/// One-step look-ahead filter: keep u_nom if value(step(x, u_nom)) >= threshold,
/// otherwise the first control maximizing value(step(x, u)).
template <typename Evaluator>
FilterDecision filtered_control(const DubinsSystem& sys, const Vec<3>& x, const Evaluator& value, double u_nom,
                                double dt, double threshold = 0.0) {
  const Vec<1> un(u_nom);
  if (value(step(sys, x, un, dt)) >= threshold) return {u_nom, false};
  double best_u = sys.controls.front()[0];
  double best_v = -std::numeric_limits<double>::infinity();
  for (const auto& u : sys.controls) {
    const double v = value(step(sys, x, u, dt));
    if (v > best_v) {
      best_v = v;
      best_u = u[0];
    }
  }
  return {best_u, true};
}

inline bool in_goal(const Vec<3>& x, const RolloutConfig& rc) {
  return std::hypot(x[0] - rc.goal_center[0], x[1] - rc.goal_center[1]) <= rc.goal_radius;
}

/// Nominal -> filter -> step until the goal disc is reached, a sampled point hits the
/// clutter, or max_steps elapse.
template <typename Evaluator>
Trajectory simulate(const DubinsSystem& sys, const Evaluator& value, const ClutterConfig<3, 2>& config,
                    const Obstacle<3>& obstacle, const RolloutConfig& rc, const Vec<3>& x0) {
  rc.validate();
  Trajectory tr;
  tr.dt = rc.dt;
  if (!x0.allFinite()) {
    tr.outcome = Outcome::error;
    tr.message = "non-finite initial state";
    return tr;
  }
  Vec<3> x = sys.wrap(x0);
  tr.states.push_back(x);
  tr.composed_values.push_back(value(x));
  const double sub = rc.dt / rc.collision_substeps;
  while (true) {
    if (clutter_contains(config, obstacle, x)) {
      tr.outcome = Outcome::collided;
      break;
    }
    if (in_goal(x, rc)) {
      tr.outcome = Outcome::reached_goal;
      break;
    }
    if (static_cast<int>(tr.steps()) >= rc.max_steps) {
      tr.outcome = Outcome::timed_out;
      break;
    }
    const FilterDecision d = filtered_control(sys, x, value, nominal_control(x, rc.goal_center), rc.dt,
                                              rc.override_threshold);
    const Vec<1> u(d.control);
    bool clipped = false;
    for (int j = 1; j < rc.collision_substeps && !clipped; ++j)
      clipped = clutter_contains(config, obstacle, step(sys, x, u, j * sub));
    x = step(sys, x, u, rc.dt);
    if (!x.allFinite()) {
      tr.outcome = Outcome::error;
      tr.message = "non-finite state";
      break;
    }
    tr.controls.push_back(d.control);
    tr.overridden.push_back(d.overridden);
    tr.states.push_back(x);
    tr.composed_values.push_back(value(x));
    if (clipped) {
      tr.outcome = Outcome::collided;
      tr.message = "collision between samples";
      break;
    }
  }
  return tr;
}

/// True iff no recorded state lies in the clutter region; with `sys` given, the
/// interior substep points of every step are replayed and checked too.
inline bool collision_free(const Trajectory& tr, const ClutterConfig<3, 2>& config, const Obstacle<3>& obstacle,
                           const DubinsSystem* sys = nullptr, int substeps = 4) {
  for (const auto& x : tr.states)
    if (clutter_contains(config, obstacle, x)) return false;
  if (sys && tr.dt > 0.0) {
    const double sub = tr.dt / substeps;
    for (std::size_t k = 0; k < tr.controls.size(); ++k)
      for (int j = 1; j < substeps; ++j)
        if (clutter_contains(config, obstacle, step(*sys, tr.states[k], Vec<1>(tr.controls[k]), j * sub)))
          return false;
  }
  return true;
}

/// Twenty fixed start states on the square of half-width 24 around the origin, spaced
/// evenly counterclockwise from (-24, -24), each heading at the origin.
inline std::vector<Vec<3>> default_battery_seeds() {
  std::vector<Vec<3>> seeds;
  const double half = 24.0;
  const double perimeter = 8.0 * half;
  for (int k = 0; k < 20; ++k) {
    double s = k * perimeter / 20.0;
    double x, y;
    if (s < 2 * half) {
      x = -half + s, y = -half;
    } else if (s < 4 * half) {
      x = half, y = -half + (s - 2 * half);
    } else if (s < 6 * half) {
      x = half - (s - 4 * half), y = half;
    } else {
      x = -half, y = half - (s - 6 * half);
    }
    seeds.emplace_back(x, y, wrap_angle(std::atan2(-y, -x)));
  }
  return seeds;
}

}  // namespace hjc
