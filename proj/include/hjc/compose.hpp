#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hjc/dynamics.hpp"
#include "hjc/geometry.hpp"
#include "hjc/oracle.hpp"
#include "hjc/solver.hpp"

namespace hjc {

/// V^c(x) = V(x - E c), zero outside the template grid.
template <int N, int D>
double eval_translated(const ValueField<N>& tmpl, const Embedding<N, D>& E, const Vec<D>& c, const Vec<N>& x) {
  if (!x.allFinite() || !c.allFinite()) throw InvalidState("eval_translated: non-finite input");
  return interpolate(tmpl, Vec<N>(x - E * c));
}

/// min_i V(x - E c_i), folded over the offsets in order.
template <int N, int D>
double eval_singleton_composed(const ValueField<N>& tmpl, const ClutterConfig<N, D>& config, const Vec<N>& x) {
  if (config.offsets.empty()) throw InvalidParameter("eval_singleton_composed: empty configuration");
  double v = eval_translated(tmpl, config.embedding, config.offsets.front(), x);
  for (std::size_t i = 1; i < config.offsets.size(); ++i)
    v = std::min(v, eval_translated(tmpl, config.embedding, config.offsets[i], x));
  return v;
}

/// How block grids are laid out: template spacing, nodes on the template lattice (so
/// blocks with lattice-aligned offsets share nodes with the translated template), and
/// the merged obstacle box inflated by `inflate` in every bounded dimension. With
/// `cover_template_roi`, the grid also contains each member's translated template grid.
template <int N>
struct GridPolicy {
  Grid<N> reference;
  double inflate = 0.0;
  bool cover_template_roi = true;
};

template <int N, int D, int M>
GridPolicy<N> default_grid_policy(const Grid<N>& template_grid, const ControlSystem<N, D, M>& sys,
                                  const SolveParams& params, double delta) {
  return {template_grid, sys.max_speed * params.T + delta};
}

template <int N>
Grid<N> block_grid(const Box<N>& box, const GridPolicy<N>& policy) {
  std::array<Axis, N> axes = policy.reference.axes;
  for (int k = 0; k < N; ++k) {
    const Axis& ref = policy.reference.axes[k];
    if (ref.periodic || !std::isfinite(box.lower[k]) || !std::isfinite(box.upper[k])) continue;
    const double sp = ref.spacing();
    const double lo = ref.lower + std::floor((box.lower[k] - policy.inflate - ref.lower) / sp + kNodeSnap) * sp;
    const double hi = ref.lower + std::ceil((box.upper[k] + policy.inflate - ref.lower) / sp - kNodeSnap) * sp;
    const int count = static_cast<int>(std::lround((hi - lo) / sp)) + 1;
    axes[k] = Axis{lo, lo + (count - 1) * sp, count, false};
  }
  return build_grid<N>(axes);
}

/// Joint value of the copies in `block` (0-based indices): cost is the min of their
/// translated costs, grid covers their merged box per `policy`.
template <int N, int D, int M>
ValueField<N> solve_block_value(const ControlSystem<N, D, M>& sys, const RunningCost<N, M>& template_cost,
                                const ClutterConfig<N, D>& config, const std::vector<std::size_t>& block,
                                const SolveParams& params, const GridPolicy<N>& policy) {
  if (block.empty()) throw InvalidParameter("solve_block_value: empty block");
  std::vector<RunningCost<N, M>> costs;
  for (std::size_t i : block) {
    if (i >= config.size()) throw InvalidParameter("solve_block_value: block index out of range");
    costs.push_back(translate_cost<N, D, M>(template_cost, config.embedding, config.offsets[i]));
  }
  const RunningCost<N, M> hb = min_cost(costs);
  Box<N> box = hb.support.bounding_box;
  if (policy.cover_template_roi) {
    Box<N> roi;
    for (int k = 0; k < N; ++k) {
      const Axis& a = policy.reference.axes[k];
      roi.lower[k] = a.periodic ? -std::numeric_limits<double>::infinity() : a.lower + policy.inflate;
      roi.upper[k] = a.periodic ? std::numeric_limits<double>::infinity() : a.upper - policy.inflate;
    }
    for (std::size_t i : block) box = box.merged(roi.shifted(Vec<N>(config.embedding * config.offsets[i])));
  }
  return solve_value(sys, hb, block_grid(box, policy), params);
}

enum class ComposeMode { singleton, blockwise, direct };

inline const char* to_string(ComposeMode m) {
  switch (m) {
    case ComposeMode::singleton: return "singleton";
    case ComposeMode::blockwise: return "blockwise";
    case ComposeMode::direct: return "direct";
  }
  return "?";
}

/// Composed safety value over a clutter configuration. Always <= 0.
template <int N, int D>
struct ComposedEvaluator {
  struct Block {
    std::vector<std::size_t> indices;
    std::shared_ptr<const ValueField<N>> field;
  };

  ComposeMode mode = ComposeMode::singleton;
  std::shared_ptr<const ValueField<N>> template_field;
  std::vector<Block> blocks;
  ClutterConfig<N, D> config;

  static ComposedEvaluator singleton(std::shared_ptr<const ValueField<N>> tmpl, ClutterConfig<N, D> cfg) {
    cfg.validate();
    if (!tmpl) throw InvalidParameter("ComposedEvaluator: missing template field");
    ComposedEvaluator ev;
    ev.mode = ComposeMode::singleton;
    ev.template_field = std::move(tmpl);
    ev.config = std::move(cfg);
    return ev;
  }

  static ComposedEvaluator blockwise(std::vector<Block> blocks, ClutterConfig<N, D> cfg) {
    cfg.validate();
    ComposedEvaluator ev;
    ev.mode = ComposeMode::blockwise;
    ev.blocks = std::move(blocks);
    ev.config = std::move(cfg);
    ev.partition().validate(ev.config.size());
    for (const auto& b : ev.blocks)
      if (!b.field) throw InvalidParameter("ComposedEvaluator: missing block field");
    return ev;
  }

  static ComposedEvaluator direct(std::shared_ptr<const ValueField<N>> field, ClutterConfig<N, D> cfg) {
    const std::size_t n = cfg.size();
    ComposedEvaluator ev = blockwise({{Partition::whole(n).blocks.front(), std::move(field)}}, std::move(cfg));
    ev.mode = ComposeMode::direct;
    return ev;
  }

  Partition partition() const {
    if (mode == ComposeMode::singleton) return Partition::singletons(config.size());
    Partition p;
    for (const auto& b : blocks) p.blocks.push_back(b.indices);
    return p;
  }

  double operator()(const Vec<N>& x) const {
    if (mode == ComposeMode::singleton) return eval_singleton_composed(*template_field, config, x);
    return eval_block_composed(*this, x);
  }
};

/// min over blocks of the block field at x (zero outside each block grid).
template <int N, int D>
double eval_block_composed(const ComposedEvaluator<N, D>& ev, const Vec<N>& x) {
  if (ev.mode == ComposeMode::singleton) throw InvalidParameter("eval_block_composed: evaluator is singleton mode");
  if (!x.allFinite()) throw InvalidState("eval_block_composed: non-finite state");
  double v = std::numeric_limits<double>::infinity();
  for (const auto& b : ev.blocks) v = std::min(v, interpolate(*b.field, x));
  return v;
}

/// Solves one field per block of `partition` and wraps them in a blockwise evaluator.
template <int N, int D, int M>
ComposedEvaluator<N, D> build_block_evaluator(const ControlSystem<N, D, M>& sys, const RunningCost<N, M>& template_cost,
                                              const ClutterConfig<N, D>& config, const Partition& partition,
                                              const SolveParams& params, const GridPolicy<N>& policy) {
  partition.validate(config.size());
  std::vector<typename ComposedEvaluator<N, D>::Block> blocks;
  for (const auto& b : partition.blocks)
    blocks.push_back({b, std::make_shared<const ValueField<N>>(solve_block_value(sys, template_cost, config, b, params, policy))});
  return ComposedEvaluator<N, D>::blockwise(std::move(blocks), config);
}

/// True iff every block of `fine` lies inside some block of `coarse`.
inline bool is_coarsening(const Partition& fine, const Partition& coarse) {
  const std::size_t n = fine.element_count();
  if (coarse.element_count() != n || !fine.is_valid(n) || !coarse.is_valid(n))
    throw InvalidParameter("is_coarsening: partitions must cover the same index set");
  std::vector<std::size_t> owner(n);
  for (std::size_t b = 0; b < coarse.blocks.size(); ++b)
    for (std::size_t i : coarse.blocks[b]) owner[i] = b;
  for (const auto& blk : fine.blocks)
    for (std::size_t i : blk)
      if (owner[i] != owner[blk.front()]) return false;
  return true;
}

struct VerificationReport {
  std::string property;
  std::size_t probes = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::vector<std::vector<double>> witnesses;
  bool pass = true;
  std::map<std::string, double> details;
  std::string note;

  void finalize() { pass = max_violation <= tolerance; }
};

namespace detail {

inline constexpr std::size_t kMaxWitnesses = 5;

template <int N>
std::vector<double> as_vector(const Vec<N>& x) {
  return std::vector<double>(x.data(), x.data() + N);
}

/// Keeps the `kMaxWitnesses` probes with the largest scores, worst first.
template <int N>
void collect_witnesses(VerificationReport& rep, const std::vector<Vec<N>>& probes, const std::vector<double>& score,
                       double threshold) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < probes.size(); ++i)
    if (score[i] > threshold) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  if (order.size() > kMaxWitnesses) order.resize(kMaxWitnesses);
  for (std::size_t i : order) rep.witnesses.push_back(as_vector(probes[i]));
}

}  // namespace detail

/// 2 (dx L_V + dt kappa) with dx the largest grid spacing and L_V the largest
/// finite-difference slope of the field.
template <int N>
double discretization_tolerance(const ValueField<N>& field, double kappa) {
  return 2.0 * (field.grid.spacing().maxCoeff() * estimate_lipschitz(field) + field.info.dt * kappa);
}

/// Checks coarse(x) <= fine(x) + tol at every probe.
template <int N, int D>
VerificationReport verify_conservatism(const ComposedEvaluator<N, D>& fine, const ComposedEvaluator<N, D>& coarse,
                                       const std::vector<Vec<N>>& probes, double tol) {
  if (fine.mode != ComposeMode::singleton && coarse.mode != ComposeMode::singleton &&
      !is_coarsening(fine.partition(), coarse.partition()))
    throw InvalidParameter("verify_conservatism: coarse partition does not coarsen the fine one");
  VerificationReport rep;
  rep.property = "conservatism";
  rep.probes = probes.size();
  rep.tolerance = tol;
  std::vector<double> gap(probes.size());
  parallel_for(probes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) gap[i] = coarse(probes[i]) - fine(probes[i]);
  });
  rep.max_violation = gap.empty() ? 0.0 : std::max(0.0, *std::max_element(gap.begin(), gap.end()));
  detail::collect_witnesses(rep, probes, gap, tol);
  rep.finalize();
  return rep;
}

/// Compares the evaluator's negative set against oracle avoid-set membership: a probe
/// should be negative iff it is unavoidable for at least one block's merged obstacle.
/// `allowed_mismatches` is the pass tolerance on the mismatch count.
template <int N, int D, int M>
VerificationReport verify_sign_sets(const ControlSystem<N, D, M>& sys, const ComposedEvaluator<N, D>& ev,
                                    const Obstacle<N>& obstacle, const std::vector<Vec<N>>& probes, double epsilon,
                                    const OracleParams& oracle, double allowed_mismatches = 0.0) {
  if (probes.empty()) throw InvalidParameter("verify_sign_sets: no probes");
  oracle.validate(sys.controls.size());
  const Partition part = ev.partition();
  std::vector<Obstacle<N>> regions;
  for (const auto& blk : part.blocks) {
    ClutterConfig<N, D> sub{{}, ev.config.embedding};
    for (std::size_t i : blk) sub.offsets.push_back(ev.config.offsets[i]);
    regions.push_back(clutter_obstacle(sub, obstacle));
  }
  // 0 agree, 1 negative but avoidable (conservative), 2 non-negative but unavoidable.
  std::vector<int> kind(probes.size(), 0);
  parallel_for(probes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const bool negative = ev(probes[i]) < -epsilon;
      bool unavoidable = false;
      for (const auto& r : regions) {
        if (!oracle_avoidable(sys, r, probes[i], oracle)) {
          unavoidable = true;
          break;
        }
      }
      kind[i] = negative == unavoidable ? 0 : (negative ? 1 : 2);
    }
  });
  VerificationReport rep;
  rep.property = "sign";
  rep.probes = probes.size();
  rep.tolerance = allowed_mismatches;
  std::vector<double> score(probes.size());
  double conservative = 0, unsound = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    conservative += kind[i] == 1;
    unsound += kind[i] == 2;
    score[i] = kind[i] == 2 ? 2.0 : (kind[i] == 1 ? 1.0 : 0.0);
  }
  rep.max_violation = conservative + unsound;
  rep.details["negative_but_avoidable"] = conservative;
  rep.details["zero_but_unavoidable"] = unsound;
  rep.details["mismatch_rate"] = (conservative + unsound) / static_cast<double>(probes.size());
  detail::collect_witnesses(rep, probes, score, 0.0);
  rep.finalize();
  return rep;
}

enum class AvoidanceVerdict { certified, exhaustively_refuted, search_failed, not_free };

/// Searches for one control sequence avoiding the whole clutter region from each probe
/// the evaluator marks free (>= -epsilon). Exhaustive when |U|^K fits the oracle budget,
/// otherwise a greedy rollout on the evaluator.
template <int N, int D, int M>
std::vector<AvoidanceVerdict> common_avoidance_verdicts(const ControlSystem<N, D, M>& sys,
                                                       const ClutterConfig<N, D>& config, const Obstacle<N>& obstacle,
                                                       const ComposedEvaluator<N, D>& ev,
                                                       const std::vector<Vec<N>>& probes, const OracleParams& params,
                                                       double epsilon) {
  const Obstacle<N> clutter = clutter_obstacle(config, obstacle);
  bool exhaustive = true;
  try {
    params.validate(sys.controls.size());
  } catch (const BudgetExceeded&) {
    exhaustive = false;
  }
  std::vector<AvoidanceVerdict> out(probes.size(), AvoidanceVerdict::not_free);
  parallel_for(probes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (ev(probes[i]) < -epsilon) continue;
      if (exhaustive) {
        out[i] = oracle_avoidable(sys, clutter, probes[i], params) ? AvoidanceVerdict::certified
                                                                   : AvoidanceVerdict::exhaustively_refuted;
        continue;
      }
      Vec<N> x = sys.wrap(probes[i]);
      bool ok = !clutter.contains(x);
      const double sub = params.dt / params.sample_collision_substeps;
      for (int k = 0; k < params.steps && ok; ++k) {
        std::size_t best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < sys.controls.size(); ++a) {
          const double v = ev(step(sys, x, sys.controls[a], params.dt));
          if (v > best_v) best_v = v, best = a;
        }
        for (int j = 1; j < params.sample_collision_substeps && ok; ++j)
          ok = !clutter.contains(step(sys, x, sys.controls[best], j * sub));
        x = step(sys, x, sys.controls[best], params.dt);
        if (k + 1 < params.steps) ok = ok && !clutter.contains(x);
      }
      out[i] = ok ? AvoidanceVerdict::certified : AvoidanceVerdict::search_failed;
    }
  });
  return out;
}

template <int N, int D, int M>
VerificationReport check_common_avoidance(const ControlSystem<N, D, M>& sys, const ClutterConfig<N, D>& config,
                                          const Obstacle<N>& obstacle, const ComposedEvaluator<N, D>& ev,
                                          const std::vector<Vec<N>>& probes, const OracleParams& params,
                                          double epsilon, double tolerance = 0.0) {
  const auto verdicts = common_avoidance_verdicts(sys, config, obstacle, ev, probes, params, epsilon);
  VerificationReport rep;
  rep.property = "common-avoidance";
  rep.tolerance = tolerance;
  double certified = 0, refuted = 0, failed = 0, negative = 0;
  std::vector<double> score(probes.size(), 0.0);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    switch (verdicts[i]) {
      case AvoidanceVerdict::certified: ++certified; break;
      case AvoidanceVerdict::exhaustively_refuted: ++refuted, score[i] = 1.0; break;
      case AvoidanceVerdict::search_failed: ++failed, score[i] = 1.0; break;
      case AvoidanceVerdict::not_free: ++negative; break;
    }
  }
  const double free = certified + refuted + failed;
  rep.probes = static_cast<std::size_t>(free);
  rep.details["certified"] = certified;
  rep.details["exhaustively_refuted"] = refuted;
  rep.details["search_failed"] = failed;
  rep.details["skipped_negative"] = negative;
  rep.details["certified_fraction"] = free > 0 ? certified / free : 1.0;
  bool exhaustive = true;
  try {
    params.validate(sys.controls.size());
  } catch (const BudgetExceeded&) {
    exhaustive = false;
  }
  rep.note = exhaustive ? "exhaustive" : "best-effort greedy search";
  rep.max_violation = free > 0 ? (refuted + failed) / free : 0.0;
  detail::collect_witnesses(rep, probes, score, 0.0);
  rep.finalize();
  return rep;
}

}  // namespace hjc
