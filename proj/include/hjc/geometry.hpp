#pragma once

#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "hjc/core.hpp"

namespace hjc {

/// Axis-aligned box; unbounded dimensions use +/-infinity.
template <int N>
struct Box {
  Vec<N> lower = Vec<N>::Constant(-std::numeric_limits<double>::infinity());
  Vec<N> upper = Vec<N>::Constant(std::numeric_limits<double>::infinity());

  bool contains(const Vec<N>& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }
  Box merged(const Box& o) const { return {lower.cwiseMin(o.lower), upper.cwiseMax(o.upper)}; }
  Box shifted(const Vec<N>& s) const { return {lower + s, upper + s}; }
};

/// Open obstacle described by a signed margin: positive depth inside, <= 0 outside.
template <int N>
struct Obstacle {
  std::function<double(const Vec<N>&)> signed_margin;
  Box<N> bounding_box;
  /// If positive: the margin depends on x only through the embedded (translation)
  /// coordinates and is Lipschitz in them with this constant. 0 = unknown.
  double margin_lipschitz = 0.0;

  bool contains(const Vec<N>& x) const { return signed_margin(x) > 0.0; }
};

/// Planar disc of the given radius in the first two coordinates, extruded over the rest.
template <int N = 3>
Obstacle<N> make_ball_obstacle(double radius) {
  static_assert(N >= 2);
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw InvalidParameter("make_ball_obstacle: radius must be positive and finite");
  Obstacle<N> o;
  o.signed_margin = [radius](const Vec<N>& x) { return radius - std::hypot(x[0], x[1]); };
  o.bounding_box.lower[0] = o.bounding_box.lower[1] = -radius;
  o.bounding_box.upper[0] = o.bounding_box.upper[1] = radius;
  o.margin_lipschitz = 1.0;
  return o;
}

/// Obstacle with no interior.
template <int N>
Obstacle<N> make_empty_obstacle() {
  Obstacle<N> o;
  o.signed_margin = [](const Vec<N>&) { return -std::numeric_limits<double>::infinity(); };
  o.bounding_box.lower.setConstant(0.0);
  o.bounding_box.upper.setConstant(0.0);
  return o;
}

template <int N, int D>
Obstacle<N> translate_obstacle(const Obstacle<N>& obs, const Embedding<N, D>& E, const Vec<D>& c) {
  const Vec<N> shift = E * c;
  Obstacle<N> o;
  o.signed_margin = [m = obs.signed_margin, shift](const Vec<N>& x) { return m(Vec<N>(x - shift)); };
  o.bounding_box = obs.bounding_box.shifted(shift);
  o.margin_lipschitz = obs.margin_lipschitz;
  return o;
}

template <int N>
Obstacle<N> union_obstacle(const std::vector<Obstacle<N>>& parts) {
  if (parts.empty()) throw InvalidParameter("union_obstacle: empty list");
  Obstacle<N> o;
  o.bounding_box = parts.front().bounding_box;
  o.margin_lipschitz = parts.front().margin_lipschitz;
  std::vector<std::function<double(const Vec<N>&)>> margins;
  for (const auto& p : parts) {
    o.bounding_box = o.bounding_box.merged(p.bounding_box);
    o.margin_lipschitz = o.margin_lipschitz > 0.0 && p.margin_lipschitz > 0.0 ? std::max(o.margin_lipschitz, p.margin_lipschitz) : 0.0;
    margins.push_back(p.signed_margin);
  }
  o.signed_margin = [margins = std::move(margins)](const Vec<N>& x) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& f : margins) m = std::max(m, f(x));
    return m;
  };
  return o;
}

/// Running cost h(t, x, u) that is zero outside its support obstacle and strictly
/// negative inside it, bounded in magnitude by `bound`.
template <int N, int M = 1>
struct RunningCost {
  std::function<double(double, const Vec<N>&, const Vec<M>&)> evaluate;
  Obstacle<N> support;
  double bound = 0.0;
  /// Lets solvers cache h per node instead of re-evaluating every sweep.
  bool time_invariant = true;

  double operator()(double t, const Vec<N>& x, const Vec<M>& u) const { return evaluate(t, x, u); }
};

/// h = -kappa * clamp(margin / delta, 0, 1). Lipschitz with constant kappa * L_margin / delta.
template <int N, int M = 1>
RunningCost<N, M> make_avoid_cost(const Obstacle<N>& obstacle, double kappa, double delta) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidParameter("make_avoid_cost: kappa must be positive");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidParameter("make_avoid_cost: delta must be positive");
  RunningCost<N, M> h;
  h.evaluate = [m = obstacle.signed_margin, kappa, delta](double, const Vec<N>& x, const Vec<M>&) {
    return -kappa * std::clamp(m(x) / delta, 0.0, 1.0);
  };
  h.support = obstacle;
  h.bound = kappa;
  return h;
}

template <int N, int M = 1>
RunningCost<N, M> make_zero_cost() {
  RunningCost<N, M> h;
  h.evaluate = [](double, const Vec<N>&, const Vec<M>&) { return 0.0; };
  h.support = make_empty_obstacle<N>();
  h.bound = 0.0;
  return h;
}

/// h^c(t, x, u) = h(t, x - E c, u).
template <int N, int D, int M>
RunningCost<N, M> translate_cost(const RunningCost<N, M>& h, const Embedding<N, D>& E, const Vec<D>& c) {
  if (!c.allFinite()) throw InvalidParameter("translate_cost: non-finite offset");
  const Vec<N> shift = E * c;
  RunningCost<N, M> out;
  out.evaluate = [f = h.evaluate, shift](double t, const Vec<N>& x, const Vec<M>& u) {
    return f(t, Vec<N>(x - shift), u);
  };
  out.support = translate_obstacle<N, D>(h.support, E, c);
  out.bound = h.bound;
  out.time_invariant = h.time_invariant;
  return out;
}

/// Pointwise minimum, folded left to right.
template <int N, int M>
RunningCost<N, M> min_cost(const std::vector<RunningCost<N, M>>& costs) {
  if (costs.empty()) throw InvalidParameter("min_cost: empty list");
  if (costs.size() == 1) return costs.front();
  RunningCost<N, M> out;
  std::vector<std::function<double(double, const Vec<N>&, const Vec<M>&)>> fs;
  std::vector<Obstacle<N>> supports;
  for (const auto& h : costs) {
    fs.push_back(h.evaluate);
    supports.push_back(h.support);
    out.bound = std::max(out.bound, h.bound);
    out.time_invariant = out.time_invariant && h.time_invariant;
  }
  out.evaluate = [fs = std::move(fs)](double t, const Vec<N>& x, const Vec<M>& u) {
    double v = fs.front()(t, x, u);
    for (std::size_t i = 1; i < fs.size(); ++i) v = std::min(v, fs[i](t, x, u));
    return v;
  };
  out.support = union_obstacle(supports);
  return out;
}

/// Obstacle offsets c_1..c_N placed through the embedding E.
template <int N, int D>
struct ClutterConfig {
  std::vector<Vec<D>> offsets;
  Embedding<N, D> embedding = Embedding<N, D>::Zero();

  std::size_t size() const { return offsets.size(); }

  void validate() const {
    if (offsets.empty()) throw InvalidParameter("ClutterConfig: at least one offset required");
    for (const auto& c : offsets)
      if (!c.allFinite()) throw InvalidParameter("ClutterConfig: non-finite offset");
  }
};

/// Centered rows x cols lattice with spacing L. Entry j * cols + i holds
/// ((i - (cols-1)/2) L, (j - (rows-1)/2) L).
inline std::vector<Vec<2>> lattice_centers(double L, int rows, int cols) {
  if (!(L > 0.0) || rows < 1 || cols < 1)
    throw InvalidParameter("lattice_centers: need L > 0 and rows, cols >= 1");
  std::vector<Vec<2>> out;
  out.reserve(static_cast<std::size_t>(rows * cols));
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i)
      out.emplace_back((i - (cols - 1) / 2.0) * L, (j - (rows - 1) / 2.0) * L);
  return out;
}

template <int N, int D>
bool clutter_contains(const ClutterConfig<N, D>& config, const Obstacle<N>& obstacle, const Vec<N>& x) {
  for (const auto& c : config.offsets)
    if (obstacle.contains(Vec<N>(x - config.embedding * c))) return true;
  return false;
}

template <int N, int D>
Obstacle<N> clutter_obstacle(const ClutterConfig<N, D>& config, const Obstacle<N>& obstacle) {
  std::vector<Obstacle<N>> parts;
  for (const auto& c : config.offsets) parts.push_back(translate_obstacle<N, D>(obstacle, config.embedding, c));
  return union_obstacle(parts);
}

/// Disjoint nonempty blocks of 0-based obstacle indices covering {0..n-1}.
struct Partition {
  std::vector<std::vector<std::size_t>> blocks;

  static Partition singletons(std::size_t n) {
    Partition p;
    for (std::size_t i = 0; i < n; ++i) p.blocks.push_back({i});
    return p;
  }
  static Partition whole(std::size_t n) {
    Partition p;
    p.blocks.emplace_back(n);
    std::iota(p.blocks.front().begin(), p.blocks.front().end(), std::size_t{0});
    return p;
  }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.size();
    return n;
  }

  bool is_valid(std::size_t n) const {
    std::vector<bool> seen(n, false);
    std::size_t total = 0;
    for (const auto& b : blocks) {
      if (b.empty()) return false;
      for (std::size_t i : b) {
        if (i >= n || seen[i]) return false;
        seen[i] = true;
        ++total;
      }
    }
    return total == n;
  }

  void validate(std::size_t n) const {
    if (!is_valid(n)) throw InvalidParameter("Partition: blocks must be disjoint, nonempty and cover all indices");
  }
};

/// Connected components of the graph joining copies whose embedded centers are closer
/// than twice the template avoid radius. Heuristic only.
template <int N, int D>
Partition suggest_blocks(const ClutterConfig<N, D>& config, double template_avoid_radius) {
  if (!(template_avoid_radius > 0.0)) throw InvalidParameter("suggest_blocks: radius must be positive");
  const std::size_t n = config.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = (config.embedding * (config.offsets[i] - config.offsets[j])).norm();
      if (dist < 2.0 * template_avoid_radius) parent[find(i)] = find(j);
    }
  Partition p;
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<std::ptrdiff_t>(p.blocks.size());
      p.blocks.emplace_back();
    }
    p.blocks[static_cast<std::size_t>(slot[r])].push_back(i);
  }
  return p;
}

}  // namespace hjc
