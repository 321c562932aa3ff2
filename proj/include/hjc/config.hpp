#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hjc/io.hpp"

namespace hjc {

/// Bad or incomplete run configuration. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VerifyOptions {
  int probes = 10000;
  /// Negative-set threshold; <= 0 selects 1e-6 * kappa * T.
  double epsilon = 0.0;
  int oracle_steps = 5;
  int oracle_substeps = 4;
  double common_avoidance_tolerance = 0.0;
};

/// Everything one CLI run needs. One JSON file determines a run.
struct RunConfig {
  std::string system = "dubins";
  double radius = 0.5;
  double kappa = 1.0;
  double delta = 0.25;

  SolveParams solve;
  std::array<int, 3> grid_counts{101, 101, 72};
  double roi_half_width = 2.5;

  std::vector<Vec<2>> offsets;
  /// "singleton", "whole", "suggest", or an explicit partition.
  std::variant<std::string, Partition> partition = std::string("singleton");
  double avoid_radius = 0.0;

  RolloutConfig rollout;
  std::vector<Vec<3>> seeds;

  VerifyOptions verify;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  double epsilon() const { return verify.epsilon > 0.0 ? verify.epsilon : 1e-6 * std::max(kappa, 1e-300) * solve.T; }

  ClutterConfig<3, 2> clutter(const Embedding<3, 2>& E) const {
    ClutterConfig<3, 2> c;
    c.embedding = E;
    c.offsets = offsets;
    return c;
  }
};

namespace detail {

using io::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown key \"" + (where.empty() ? "" : where + ".") + it.key() + "\"");
}

template <typename T>
T get(const json& obj, const std::string& where, const char* key, std::optional<T> fallback = std::nullopt) {
  const std::string full = where.empty() ? key : where + "." + key;
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key \"" + full + "\"");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key \"" + full + "\" has the wrong type");
  }
}

inline std::string line_of(const std::string& text, std::size_t byte) {
  const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size())), '\n');
  return std::to_string(line);
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  using detail::get;
  using io::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error at line " + detail::line_of(text, e.byte) + ": " + e.what());
  }
  detail::reject_unknown(root, "",
                         {"system", "obstacle", "solver", "clutter", "partition", "rollout", "verify", "output_dir", "seed",
                          "avoid_radius"});
  RunConfig c;
  c.system = get<std::string>(root, "", "system");
  if (c.system != "dubins") throw ConfigError("key \"system\": unknown system \"" + c.system + "\"");

  const json ob = root.value("obstacle", json::object());
  detail::reject_unknown(ob, "obstacle", {"radius", "kappa", "delta"});
  c.radius = get<double>(ob, "obstacle", "radius", 0.5);
  c.kappa = get<double>(ob, "obstacle", "kappa", 1.0);
  c.delta = get<double>(ob, "obstacle", "delta", 0.25);
  if (!(c.radius > 0.0)) throw ConfigError("key \"obstacle.radius\" must be positive");
  if (!(c.kappa >= 0.0)) throw ConfigError("key \"obstacle.kappa\" must be non-negative");
  if (!(c.delta > 0.0)) throw ConfigError("key \"obstacle.delta\" must be positive");

  if (!root.contains("solver")) throw ConfigError("missing required key \"solver\"");
  const json& so = root.at("solver");
  detail::reject_unknown(so, "solver", {"T", "dt", "lambda", "grid_counts", "roi_half_width", "quadrature_substeps"});
  c.solve.T = get<double>(so, "solver", "T");
  c.solve.dt = get<double>(so, "solver", "dt", 0.02);
  c.solve.lambda = get<double>(so, "solver", "lambda", 0.0);
  c.solve.quadrature_substeps = get<int>(so, "solver", "quadrature_substeps", 1);
  c.grid_counts = get<std::array<int, 3>>(so, "solver", "grid_counts", std::array<int, 3>{101, 101, 72});
  c.roi_half_width = get<double>(so, "solver", "roi_half_width", 2.5);
  try {
    (void)c.solve.steps();
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }

  const json cl = root.value("clutter", json{{"lattice", {{"L", 5.0}, {"rows", 10}, {"cols", 10}}}});
  detail::reject_unknown(cl, "clutter", {"lattice", "offsets"});
  if (cl.contains("lattice") == cl.contains("offsets"))
    throw ConfigError("clutter: give exactly one of \"lattice\" or \"offsets\"");
  if (cl.contains("lattice")) {
    const json& la = cl.at("lattice");
    detail::reject_unknown(la, "clutter.lattice", {"L", "rows", "cols"});
    try {
      c.offsets = lattice_centers(get<double>(la, "clutter.lattice", "L"), get<int>(la, "clutter.lattice", "rows"),
                                  get<int>(la, "clutter.lattice", "cols"));
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("clutter.lattice: ") + e.what());
    }
  } else {
    for (const auto& o : cl.at("offsets")) {
      if (!o.is_array() || o.size() != 2) throw ConfigError("clutter.offsets: each offset must be [x, y]");
      c.offsets.emplace_back(o.at(0).get<double>(), o.at(1).get<double>());
    }
    if (c.offsets.empty()) throw ConfigError("clutter.offsets: at least one offset required");
  }

  if (root.contains("partition")) {
    const json& p = root.at("partition");
    if (p.is_string()) {
      const auto s = p.get<std::string>();
      if (s != "singleton" && s != "whole" && s != "suggest") throw ConfigError("key \"partition\": unknown mode \"" + s + "\"");
      c.partition = s;
    } else {
      try {
        c.partition = io::partition_from_json(p, c.offsets.size());
      } catch (const std::exception& e) {
        throw ConfigError(std::string("key \"partition\": ") + e.what());
      }
    }
  }
  c.avoid_radius = get<double>(root, "", "avoid_radius", 0.0);

  const json ro = root.value("rollout", json::object());
  detail::reject_unknown(ro, "rollout",
                         {"dt", "max_steps", "goal_center", "goal_radius", "override_threshold", "collision_substeps", "seeds"});
  c.rollout.dt = get<double>(ro, "rollout", "dt", 0.05);
  c.rollout.max_steps = get<int>(ro, "rollout", "max_steps", 4000);
  const auto gc = get<std::array<double, 2>>(ro, "rollout", "goal_center", std::array<double, 2>{0.0, 0.0});
  c.rollout.goal_center = Vec<2>(gc[0], gc[1]);
  c.rollout.goal_radius = get<double>(ro, "rollout", "goal_radius", 0.5);
  c.rollout.override_threshold = get<double>(ro, "rollout", "override_threshold", 0.0);
  c.rollout.collision_substeps = get<int>(ro, "rollout", "collision_substeps", 4);
  try {
    c.rollout.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("rollout: ") + e.what());
  }
  if (ro.contains("seeds")) {
    for (const auto& s : ro.at("seeds")) {
      if (!s.is_array() || s.size() != 3) throw ConfigError("rollout.seeds: each seed must be [x, y, theta]");
      c.seeds.emplace_back(s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>());
    }
  } else {
    c.seeds = default_battery_seeds();
  }

  const json ve = root.value("verify", json::object());
  detail::reject_unknown(ve, "verify", {"probes", "epsilon", "oracle_steps", "oracle_substeps", "common_avoidance_tolerance"});
  c.verify.probes = get<int>(ve, "verify", "probes", 10000);
  c.verify.epsilon = get<double>(ve, "verify", "epsilon", 0.0);
  c.verify.oracle_steps = get<int>(ve, "verify", "oracle_steps", 5);
  c.verify.oracle_substeps = get<int>(ve, "verify", "oracle_substeps", 4);
  c.verify.common_avoidance_tolerance = get<double>(ve, "verify", "common_avoidance_tolerance", 0.0);

  c.output_dir = get<std::string>(root, "", "output_dir", std::string("out"));
  c.seed = get<std::uint64_t>(root, "", "seed", std::uint64_t{0});
  return c;
}

}  // namespace hjc
