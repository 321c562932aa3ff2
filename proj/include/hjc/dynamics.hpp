#pragma once

#include <array>
#include <functional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hjc/core.hpp"

namespace hjc {

/// Controlled system x' = f(x, u) with a finite ordered control set and a translation
/// embedding E (n x d): obstacle copies are placed at x + E c.
template <int N, int D, int M = 1>
struct ControlSystem {
  using State = Vec<N>;
  using Control = Vec<M>;
  using Offset = Vec<D>;

  std::vector<Control> controls;
  std::function<State(const State&, const Control&)> vector_field;
  Embedding<N, D> embedding = Embedding<N, D>::Zero();
  /// Periodic coordinates are angles stored in [-pi, pi).
  std::array<bool, N> periodic{};
  /// Upper bound on the speed along the embedded (translation) coordinates.
  double max_speed = 1.0;
  std::string description;

  static constexpr std::size_t state_dim = N;
  static constexpr std::size_t offset_dim = D;

  State wrap(State x) const {
    for (int k = 0; k < N; ++k)
      if (periodic[k]) x[k] = wrap_angle(x[k]);
    return x;
  }

  State translate(const State& x, const Offset& c) const { return wrap(State(x + embedding * c)); }
};

using DubinsSystem = ControlSystem<3, 2, 1>;

/// Unit-speed Dubins car: x' = cos(theta), y' = sin(theta), theta' = u, u in {-1, +1}.
inline DubinsSystem make_dubins() {
  DubinsSystem sys;
  sys.controls = {Vec<1>::Constant(-1.0), Vec<1>::Constant(1.0)};
  sys.vector_field = [](const Vec<3>& x, const Vec<1>& u) {
    return Vec<3>(std::cos(x[2]), std::sin(x[2]), u[0]);
  };
  sys.embedding << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0;
  sys.periodic = {false, false, true};
  sys.max_speed = 1.0;
  sys.description = "dubins";
  return sys;
}

/// One classical RK4 step with the control held constant; periodic coordinates re-wrapped.
template <int N, int D, int M>
Vec<N> step(const ControlSystem<N, D, M>& sys, const Vec<N>& x, const Vec<M>& u, double dt) {
  if (!(dt > 0.0)) throw InvalidParameter("step: dt must be positive");
  if (!x.allFinite()) throw InvalidState("step: non-finite state");
  const auto& f = sys.vector_field;
  const Vec<N> k1 = f(x, u);
  const Vec<N> k2 = f(Vec<N>(x + 0.5 * dt * k1), u);
  const Vec<N> k3 = f(Vec<N>(x + 0.5 * dt * k2), u);
  const Vec<N> k4 = f(Vec<N>(x + dt * k3), u);
  return sys.wrap(Vec<N>(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)));
}

struct InvarianceReport {
  double max_residual = 0.0;
  bool pass = true;
  double tolerance = 1e-12;
};

/// Samples max ||f(x + E c, u) - f(x, u)|| over the given (state, offset, control) triples.
template <int N, int D, int M>
InvarianceReport check_translation_invariance(
    const ControlSystem<N, D, M>& sys,
    const std::vector<std::tuple<Vec<N>, Vec<D>, Vec<M>>>& samples, double tolerance = 1e-12) {
  if (samples.empty()) throw InvalidParameter("check_translation_invariance: no samples");
  InvarianceReport rep;
  rep.tolerance = tolerance;
  for (const auto& [x, c, u] : samples) {
    const Vec<N> shifted = x + sys.embedding * c;
    const double r = (sys.vector_field(shifted, u) - sys.vector_field(x, u)).norm();
    rep.max_residual = std::max(rep.max_residual, r);
  }
  rep.pass = rep.max_residual <= tolerance;
  return rep;
}

}  // namespace hjc
