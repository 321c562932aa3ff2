// hjc: solve, compose, verify and roll out translated avoid values for the Dubins car
// in a tiled clutter field.
//
// Exit codes: 0 success, 1 a verified property failed, 2 bad usage or config,
// 3 missing input artifacts, 4 solver or I/O failure.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hjc/config.hpp"
#include "hjc/io.hpp"
#include "hjc/study.hpp"

namespace {

using namespace hjc;
using io::json;
namespace fs = std::filesystem;

constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMissingInput = 3;
constexpr int kExitRuntime = 4;

struct ExitError : std::runtime_error {
  int code;
  ExitError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string mode = "singleton";
  double theta = kPi;
  std::optional<std::uint64_t> seed;
  std::string properties = "sign,conservatism,coarsening";
  std::string field;
};

struct Context {
  RunConfig cfg;
  fs::path out;
  DubinsSystem sys = make_dubins();
  Obstacle<3> obstacle;
  RunningCost<3> cost;
  Grid<3> grid;
  ClutterConfig<3, 2> clutter;
};

Context load(const Options& opt) {
  Context ctx;
  std::string text;
  try {
    text = io::read_file(opt.config_path);
  } catch (const io::IoError& e) {
    throw ExitError(kExitUsage, e.what());
  }
  try {
    ctx.cfg = parse_run_config(text);
  } catch (const ConfigError& e) {
    throw ExitError(kExitUsage, std::string("config error: ") + e.what());
  }
  if (opt.seed) ctx.cfg.seed = *opt.seed;
  ctx.out = opt.out_dir.empty() ? fs::path(ctx.cfg.output_dir) : fs::path(opt.out_dir);
  ctx.obstacle = make_ball_obstacle<3>(ctx.cfg.radius);
  ctx.cost = study::template_cost(ctx.cfg.radius, ctx.cfg.kappa, ctx.cfg.delta);
  const auto& n = ctx.cfg.grid_counts;
  try {
    ctx.grid = study::template_grid(n[0], n[1], n[2], ctx.cfg.roi_half_width);
  } catch (const InvalidParameter& e) {
    throw ExitError(kExitUsage, std::string("config error: solver.grid_counts: ") + e.what());
  }
  ctx.clutter = study::clutter(ctx.sys, ctx.cfg.offsets);
  return ctx;
}

json run_metadata(const Context& ctx) {
  return {{"system", ctx.cfg.system},
          {"radius", ctx.cfg.radius},
          {"kappa", ctx.cfg.kappa},
          {"delta", ctx.cfg.delta},
          {"roi_half_width", ctx.cfg.roi_half_width},
          {"empty_obstacle", ctx.cfg.kappa == 0.0},
          {"parameter_note", "kappa, delta, grid counts, T, lambda and dt are solver choices, not reference values"}};
}

std::shared_ptr<const ValueField<3>> load_template(const Context& ctx) {
  const fs::path p = ctx.out / "template.json";
  if (!fs::exists(p)) throw ExitError(kExitMissingInput, "missing input: " + p.string() + " (run solve-template first)");
  try {
    return std::make_shared<const ValueField<3>>(io::read_value_field<3>(p));
  } catch (const std::exception& e) {
    throw ExitError(kExitMissingInput, std::string("cannot read template: ") + e.what());
  }
}

Partition resolve_partition(const Context& ctx, const std::shared_ptr<const ValueField<3>>& tmpl) {
  const std::size_t n = ctx.clutter.size();
  if (const auto* p = std::get_if<Partition>(&ctx.cfg.partition)) return *p;
  const auto& mode = std::get<std::string>(ctx.cfg.partition);
  if (mode == "singleton") return Partition::singletons(n);
  if (mode == "whole") return Partition::whole(n);
  double r = ctx.cfg.avoid_radius;
  if (r <= 0.0) {
    if (!tmpl) throw ExitError(kExitMissingInput, "partition \"suggest\" needs avoid_radius or a solved template");
    r = study::avoid_radius(*tmpl, ctx.cfg.epsilon());
  }
  if (r <= 0.0) return Partition::singletons(n);
  return suggest_blocks(ctx.clutter, r);
}

GridPolicy<3> policy(const Context& ctx) { return default_grid_policy(ctx.grid, ctx.sys, ctx.cfg.solve, ctx.cfg.delta); }

io::SliceWindow clutter_slice_window(const Context& ctx) {
  const Box<2> b = study::clutter_window(ctx.clutter, ctx.cfg.roi_half_width);
  const Vec<3> sp = ctx.grid.spacing();
  io::SliceWindow w;
  w.x_lower = b.lower[0], w.x_upper = b.upper[0];
  w.y_lower = b.lower[1], w.y_upper = b.upper[1];
  w.nx = static_cast<int>(std::lround((w.x_upper - w.x_lower) / sp[0])) + 1;
  w.ny = static_cast<int>(std::lround((w.y_upper - w.y_lower) / sp[1])) + 1;
  return w;
}

// ---------------------------------------------------------------------------

int cmd_solve_template(const Options& opt) {
  Context ctx = load(opt);
  const ValueField<3> f = solve_value(ctx.sys, ctx.cost, ctx.grid, ctx.cfg.solve);
  io::write_value_field(f, ctx.out, "template", run_metadata(ctx));
  const double eps = ctx.cfg.epsilon();
  std::printf("template solved: %zu nodes, %d steps, min V = %.6g\n", f.values.size(), f.info.steps, f.min_value());
  std::printf("boundary layer max |V| = %.6g (epsilon %.3g): extension by zero %s\n", f.info.boundary_layer_max_abs, eps,
              f.info.boundary_layer_max_abs <= eps ? "sound" : "NOT sound, enlarge the ROI");
  for (const auto& w : f.info.warnings) std::printf("warning: %s\n", w.c_str());
  std::printf("wrote %s\n", (ctx.out / "template.json").string().c_str());
  return 0;
}

int cmd_compose(const Options& opt) {
  Context ctx = load(opt);
  ComposeMode mode;
  if (opt.mode == "singleton") mode = ComposeMode::singleton;
  else if (opt.mode == "blockwise") mode = ComposeMode::blockwise;
  else if (opt.mode == "direct") mode = ComposeMode::direct;
  else throw ExitError(kExitUsage, "unknown --mode \"" + opt.mode + "\" (singleton|blockwise|direct)");

  std::shared_ptr<const ValueField<3>> tmpl;
  if (mode == ComposeMode::singleton) tmpl = load_template(ctx);
  else if (fs::exists(ctx.out / "template.json")) tmpl = load_template(ctx);

  ComposedEvaluator<3, 2> ev;
  Partition part;
  if (mode == ComposeMode::singleton) {
    ev = ComposedEvaluator<3, 2>::singleton(tmpl, ctx.clutter);
    part = Partition::singletons(ctx.clutter.size());
  } else {
    part = mode == ComposeMode::direct ? Partition::whole(ctx.clutter.size()) : resolve_partition(ctx, tmpl);
    ev = build_block_evaluator(ctx.sys, ctx.cost, ctx.clutter, part, ctx.cfg.solve, policy(ctx));
    if (mode == ComposeMode::direct) {
      ev.mode = ComposeMode::direct;
      io::write_value_field(*ev.blocks.front().field, ctx.out, "direct", run_metadata(ctx));
    } else {
      for (std::size_t k = 0; k < ev.blocks.size(); ++k)
        io::write_value_field(*ev.blocks[k].field, ctx.out, "block_" + std::to_string(k + 1), run_metadata(ctx));
    }
  }

  const io::SliceWindow w = clutter_slice_window(ctx);
  const std::string name = std::string("slice_") + to_string(mode);
  io::write_slice(ctx.out / (name + ".csv"), ev, w, opt.theta, {{"mode", to_string(mode)}});
  json files = {name + ".csv"};
  if (mode == ComposeMode::direct && tmpl) {
    const auto single = ComposedEvaluator<3, 2>::singleton(tmpl, ctx.clutter);
    io::write_slice(ctx.out / "diff_singleton_direct.csv",
                    [&](const Vec<3>& x) { return std::abs(single(x) - ev(x)); }, w, opt.theta,
                    {{"mode", "abs(singleton - direct)"}});
    files.push_back("diff_singleton_direct.csv");
  }
  io::write_json(ctx.out / "clutter.json", io::clutter_to_json(ctx.clutter));
  io::write_json(ctx.out / ("compose_" + std::string(to_string(mode)) + ".json"),
                 {{"mode", to_string(mode)},
                  {"theta", opt.theta},
                  {"partition", io::partition_to_json(part)},
                  {"blocks", part.blocks.size()},
                  {"files", files},
                  {"radius", ctx.cfg.radius}});
  std::printf("composed (%s) slice at theta = %.6g written to %s\n", to_string(mode), opt.theta,
              (ctx.out / (name + ".csv")).string().c_str());
  return 0;
}

int cmd_blocks(const Options& opt) {
  Context ctx = load(opt);
  std::shared_ptr<const ValueField<3>> tmpl;
  if (fs::exists(ctx.out / "template.json")) tmpl = load_template(ctx);
  double r = ctx.cfg.avoid_radius;
  if (r <= 0.0) {
    if (!tmpl) throw ExitError(kExitMissingInput, "blocks needs avoid_radius in the config or a solved template");
    r = study::avoid_radius(*tmpl, ctx.cfg.epsilon());
  }
  const Partition p = r > 0.0 ? suggest_blocks(ctx.clutter, r) : Partition::singletons(ctx.clutter.size());
  io::write_json(ctx.out / "partition.json", io::partition_to_json(p));
  std::printf("avoid radius %.6g -> %zu blocks, written to %s\n", r, p.blocks.size(),
              (ctx.out / "partition.json").string().c_str());
  return 0;
}

VerificationReport verify_sign(const Context& ctx, const std::shared_ptr<const ValueField<3>>& tmpl) {
  const double eps = ctx.cfg.epsilon();
  VerificationReport rep;
  rep.property = "sign";
  rep.tolerance = 0.0;
  const auto ev = ComposedEvaluator<3, 2>::singleton(tmpl, ctx.clutter);
  const auto probes = study::uniform_probes(study::clutter_window(ctx.clutter, ctx.cfg.roi_half_width),
                                            static_cast<std::size_t>(ctx.cfg.verify.probes), ctx.cfg.seed);
  rep.probes = probes.size() + tmpl->values.size();
  double violations = 0.0;
  std::vector<double> score(probes.size(), 0.0);
  // Stored values must be non-positive.
  std::size_t worst_node = 0;
  for (std::size_t i = 0; i < tmpl->values.size(); ++i)
    if (tmpl->values[i] > tmpl->values[worst_node]) worst_node = i;
  const double max_node = tmpl->values.empty() ? 0.0 : tmpl->values[worst_node];
  if (max_node > 0.0) {
    violations += 1.0;
    rep.witnesses.push_back(detail::as_vector(tmpl->grid.node(worst_node)));
  }
  // Extension by zero is sound only if the template boundary layer is ~0.
  if (tmpl->info.boundary_layer_max_abs > eps) violations += 1.0;
  // The composed negative set equals the union of per-copy negative sets.
  double set_mismatch = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double v = ev(probes[i]);
    bool any = false;
    for (const auto& c : ctx.clutter.offsets) any = any || eval_translated(*tmpl, ctx.clutter.embedding, c, probes[i]) < -eps;
    if ((v < -eps) != any || v > 0.0) {
      set_mismatch += 1.0;
      score[i] = 1.0;
    }
  }
  violations += set_mismatch;
  detail::collect_witnesses(rep, probes, score, 0.0);
  rep.details["max_node_value"] = max_node;
  rep.details["boundary_layer_max_abs"] = tmpl->info.boundary_layer_max_abs;
  rep.details["set_mismatches"] = set_mismatch;
  rep.details["epsilon"] = eps;
  rep.max_violation = violations;
  rep.note = "non-positivity, extension-by-zero boundary layer, min-composition negative set";
  rep.finalize();
  return rep;
}

std::vector<VerificationReport> verify_chain(const Context& ctx, const std::shared_ptr<const ValueField<3>>& tmpl,
                                             bool conservatism_only) {
  const double tol = discretization_tolerance(*tmpl, ctx.cfg.kappa);
  const double eps = ctx.cfg.epsilon();
  const auto probes = study::uniform_probes(study::clutter_window(ctx.clutter, ctx.cfg.roi_half_width),
                                            static_cast<std::size_t>(ctx.cfg.verify.probes), ctx.cfg.seed);
  const auto single = ComposedEvaluator<3, 2>::singleton(tmpl, ctx.clutter);
  const auto direct = build_block_evaluator(ctx.sys, ctx.cost, ctx.clutter, Partition::whole(ctx.clutter.size()),
                                            ctx.cfg.solve, policy(ctx));
  std::vector<VerificationReport> out;
  if (conservatism_only) {
    auto rep = verify_conservatism(single, direct, probes, tol);
    double inclusion = 0;
    for (const auto& x : probes)
      if (single(x) < -eps && !(direct(x) < 0.0)) inclusion += 1;
    rep.details["inner_certificate_violations"] = inclusion;
    rep.max_violation = std::max(rep.max_violation, inclusion > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.finalize();
    out.push_back(rep);
    return out;
  }
  const Partition mid = resolve_partition(ctx, tmpl);
  const auto middle = build_block_evaluator(ctx.sys, ctx.cost, ctx.clutter, mid, ctx.cfg.solve, policy(ctx));
  auto a = verify_conservatism(single, middle, probes, tol);
  auto b = verify_conservatism(middle, direct, probes, tol);
  VerificationReport rep;
  rep.property = "coarsening";
  rep.probes = probes.size();
  rep.tolerance = tol;
  rep.max_violation = std::max(a.max_violation, b.max_violation);
  rep.witnesses = a.max_violation >= b.max_violation ? a.witnesses : b.witnesses;
  rep.details["singleton_to_partition"] = a.max_violation;
  rep.details["partition_to_whole"] = b.max_violation;
  rep.details["middle_blocks"] = static_cast<double>(mid.blocks.size());
  rep.finalize();
  out.push_back(rep);
  return out;
}

VerificationReport verify_translation(const Context& ctx, const std::shared_ptr<const ValueField<3>>& tmpl) {
  const Vec<3> sp = tmpl->grid.spacing();
  const Vec<2> shift(10 * sp[0], 10 * sp[1]);
  const auto h = translate_cost<3, 2, 1>(ctx.cost, ctx.sys.embedding, shift);
  const ValueField<3> moved = solve_value(ctx.sys, h, study::shifted_grid(tmpl->grid, shift), ctx.cfg.solve);
  VerificationReport rep;
  rep.property = "translation";
  rep.tolerance = 1e-9;
  rep.probes = moved.values.size();
  std::vector<double> diff(moved.values.size());
  std::vector<Vec<3>> nodes(moved.values.size());
  for (std::size_t i = 0; i < moved.values.size(); ++i) {
    nodes[i] = moved.grid.node(i);
    diff[i] = std::abs(moved.values[i] - eval_translated(*tmpl, ctx.sys.embedding, shift, nodes[i]));
    rep.max_violation = std::max(rep.max_violation, diff[i]);
  }
  detail::collect_witnesses(rep, nodes, diff, rep.tolerance);
  rep.finalize();
  return rep;
}

VerificationReport verify_common(const Context& ctx, const std::shared_ptr<const ValueField<3>>& tmpl) {
  const auto ev = ComposedEvaluator<3, 2>::singleton(tmpl, ctx.clutter);
  OracleParams op;
  op.dt = ctx.cfg.solve.dt;
  op.steps = ctx.cfg.verify.oracle_steps;
  op.sample_collision_substeps = ctx.cfg.verify.oracle_substeps;
  const auto probes = study::uniform_probes(study::clutter_window(ctx.clutter, ctx.cfg.roi_half_width),
                                            static_cast<std::size_t>(std::min(ctx.cfg.verify.probes, 2000)), ctx.cfg.seed);
  return check_common_avoidance(ctx.sys, ctx.clutter, ctx.obstacle, ev, probes, op, ctx.cfg.epsilon(),
                                ctx.cfg.verify.common_avoidance_tolerance);
}

int cmd_verify(const Options& opt) {
  std::vector<std::string> props;
  {
    std::stringstream ss(opt.properties);
    std::string p;
    while (std::getline(ss, p, ','))
      if (!p.empty()) props.push_back(p);
  }
  static const std::set<std::string> known = {"sign", "conservatism", "coarsening", "translation", "common-avoidance"};
  for (const auto& p : props)
    if (!known.count(p)) throw ExitError(kExitUsage, "unknown property \"" + p + "\"");
  if (props.empty()) throw ExitError(kExitUsage, "no properties given");

  Context ctx = load(opt);
  const auto tmpl = load_template(ctx);
  std::vector<VerificationReport> reports;
  for (const auto& p : props) {
    if (p == "sign") reports.push_back(verify_sign(ctx, tmpl));
    else if (p == "conservatism") reports.push_back(verify_chain(ctx, tmpl, true).front());
    else if (p == "coarsening") reports.push_back(verify_chain(ctx, tmpl, false).front());
    else if (p == "translation") reports.push_back(verify_translation(ctx, tmpl));
    else reports.push_back(verify_common(ctx, tmpl));
  }
  json summary = json::array();
  bool all = true;
  for (const auto& r : reports) {
    io::write_json(ctx.out / ("verify_" + r.property + ".json"), io::report_to_json(r));
    summary.push_back({{"property", r.property}, {"pass", r.pass}, {"max_violation", r.max_violation}});
    std::printf("%-18s %s  max_violation=%.6g tol=%.6g probes=%zu\n", r.property.c_str(), r.pass ? "PASS" : "FAIL",
                r.max_violation, r.tolerance, r.probes);
    if (!r.pass) {
      all = false;
      if (!r.witnesses.empty()) {
        const auto& w = r.witnesses.front();
        std::printf("  worst witness: (%.6g, %.6g, %.6g)\n", w[0], w[1], w[2]);
      }
    }
  }
  io::write_json(ctx.out / "verify_summary.json", {{"reports", summary}, {"pass", all}});
  return all ? 0 : kExitVerifyFailed;
}

int cmd_rollout(const Options& opt) {
  Context ctx = load(opt);
  const auto tmpl = load_template(ctx);
  const auto ev = ComposedEvaluator<3, 2>::singleton(tmpl, ctx.clutter);
  json seeds = json::array();
  std::size_t reached = 0, collided = 0, timed_out = 0;
  double override_sum = 0.0;
  for (std::size_t k = 0; k < ctx.cfg.seeds.size(); ++k) {
    const Trajectory tr = simulate(ctx.sys, ev, ctx.clutter, ctx.obstacle, ctx.cfg.rollout, ctx.cfg.seeds[k]);
    const std::string name = "rollout_" + std::to_string(k) + ".csv";
    io::write_file_atomic(ctx.out / name, io::trajectory_csv(tr));
    json s = io::trajectory_summary(tr);
    s["seed_index"] = k;
    s["initial_state"] = detail::as_vector(ctx.cfg.seeds[k]);
    s["file"] = name;
    seeds.push_back(s);
    reached += tr.outcome == Outcome::reached_goal;
    collided += tr.outcome == Outcome::collided;
    timed_out += tr.outcome == Outcome::timed_out;
    override_sum += tr.override_fraction();
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, ctx.cfg.seeds.size()));
  io::write_json(ctx.out / "clutter.json", io::clutter_to_json(ctx.clutter));
  io::write_json(ctx.out / "rollout_summary.json",
                 {{"runs", ctx.cfg.seeds.size()},
                  {"reached_goal", reached},
                  {"collisions", collided},
                  {"timed_out", timed_out},
                  {"success_rate", reached / n},
                  {"mean_override_fraction", override_sum / n},
                  {"goal_center", {ctx.cfg.rollout.goal_center[0], ctx.cfg.rollout.goal_center[1]}},
                  {"goal_radius", ctx.cfg.rollout.goal_radius},
                  {"radius", ctx.cfg.radius},
                  {"seeds", seeds}});
  std::printf("rollouts: %zu runs, %zu reached goal, %zu collided, %zu timed out\n", ctx.cfg.seeds.size(), reached,
              collided, timed_out);
  return 0;
}

int cmd_export_slice(const Options& opt) {
  Context ctx = load(opt);
  const fs::path src = opt.field.empty() ? ctx.out / "template.json" : fs::path(opt.field);
  if (!fs::exists(src)) throw ExitError(kExitMissingInput, "missing input: " + src.string());
  const ValueField<3> f = io::read_value_field<3>(src);
  io::SliceWindow w;
  w.x_lower = f.grid.axes[0].lower, w.x_upper = f.grid.axes[0].upper, w.nx = f.grid.axes[0].count;
  w.y_lower = f.grid.axes[1].lower, w.y_upper = f.grid.axes[1].upper, w.ny = f.grid.axes[1].count;
  fs::path dst = ctx.out / (src.stem().string() + "_slice.csv");
  io::write_slice(dst, f, w, opt.theta, {{"source", src.filename().string()}});
  std::printf("wrote %s\n", dst.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hjc: translated avoid-value composition for the Dubins car"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Run configuration (JSON)")->required();
    sub->add_option("--out", opt.out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", opt.seed, "Probe seed (overrides seed)");
    sub->add_option("--theta", opt.theta, "Heading of exported slices [rad]");
  };
  auto* solve = app.add_subcommand("solve-template", "Solve the single-obstacle template value");
  auto* compose = app.add_subcommand("compose", "Compose values over the clutter and export a slice");
  auto* blocks = app.add_subcommand("blocks", "Suggest a block partition");
  auto* verify = app.add_subcommand("verify", "Run verification properties");
  auto* rollout = app.add_subcommand("rollout", "Closed-loop rollouts with the safety filter");
  auto* slice = app.add_subcommand("export-slice", "Export a heading slice of a stored field");
  for (auto* s : {solve, compose, blocks, verify, rollout, slice}) add_common(s);
  compose->add_option("--mode", opt.mode, "singleton | blockwise | direct");
  verify->add_option("--properties", opt.properties,
                     "Comma-separated: sign, conservatism, coarsening, translation, common-avoidance");
  slice->add_option("--field", opt.field, "Field header to export (default <out>/template.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*solve) return cmd_solve_template(opt);
    if (*compose) return cmd_compose(opt);
    if (*blocks) return cmd_blocks(opt);
    if (*verify) return cmd_verify(opt);
    if (*rollout) return cmd_rollout(opt);
    if (*slice) return cmd_export_slice(opt);
  } catch (const ExitError& e) {
    std::fprintf(stderr, "hjc: %s\n", e.what());
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hjc: error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
