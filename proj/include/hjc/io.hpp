#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hjc/compose.hpp"
#include "hjc/rollout.hpp"
#include "hjc/solver.hpp"

namespace hjc::io {

namespace fs = std::filesystem;
using nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

/// Shortest round-trip decimal representation.
inline std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Float payloads: little-endian IEEE-754 binary64, row-major node order.

inline std::string encode_f64(const std::vector<double>& values) {
  std::string out(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) out[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  return out;
}

inline std::vector<double> decode_f64(const std::string& bytes) {
  if (bytes.size() % 8 != 0) throw IoError("float64 payload size is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ValueField: <stem>.json header + <stem>.f64 payload.

template <int N>
json grid_to_json(const Grid<N>& g) {
  json axes = json::array();
  for (const auto& a : g.axes)
    axes.push_back({{"lower", a.lower}, {"upper", a.upper}, {"count", a.count}, {"periodic", a.periodic}});
  return axes;
}

template <int N>
Grid<N> grid_from_json(const json& j) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) throw IoError("grid: expected " + std::to_string(N) + " axes");
  std::array<Axis, N> axes{};
  for (int k = 0; k < N; ++k) {
    const auto& a = j.at(static_cast<std::size_t>(k));
    axes[k] = Axis{a.at("lower").get<double>(), a.at("upper").get<double>(), a.at("count").get<int>(),
                   a.at("periodic").get<bool>()};
  }
  return build_grid<N>(axes);
}

inline json info_to_json(const SolveInfo& info) {
  return {{"solver", info.solver},
          {"dt", info.dt},
          {"steps", info.steps},
          {"quadrature_substeps", info.quadrature_substeps},
          {"reach_cutoff", info.reach_cutoff},
          {"max_overshoot", info.max_overshoot},
          {"boundary_layer_max_abs", info.boundary_layer_max_abs},
          {"cost_bound", info.cost_bound},
          {"warnings", info.warnings}};
}

inline SolveInfo info_from_json(const json& j) {
  SolveInfo info;
  info.solver = j.value("solver", std::string("grid-dp"));
  info.dt = j.value("dt", 0.0);
  info.steps = j.value("steps", 0);
  info.quadrature_substeps = j.value("quadrature_substeps", 1);
  info.reach_cutoff = j.value("reach_cutoff", false);
  info.max_overshoot = j.value("max_overshoot", 0.0);
  info.boundary_layer_max_abs = j.value("boundary_layer_max_abs", 0.0);
  info.cost_bound = j.value("cost_bound", 0.0);
  info.warnings = j.value("warnings", std::vector<std::string>{});
  return info;
}

/// Writes dir/stem.json and dir/stem.f64. `extra` is merged into the header's metadata.
template <int N>
void write_value_field(const ValueField<N>& field, const fs::path& dir, const std::string& stem,
                       const json& extra = json::object()) {
  json meta = info_to_json(field.info);
  for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
  const json header = {{"format", "hjc-value-field"},
                       {"version", 1},
                       {"grid", grid_to_json(field.grid)},
                       {"time", field.time},
                       {"horizon", field.horizon},
                       {"discount", field.discount},
                       {"metadata", meta},
                       {"payload", stem + ".f64"},
                       {"dtype", "float64-le"},
                       {"order", "row-major"},
                       {"node_count", field.values.size()}};
  write_file_atomic(dir / (stem + ".f64"), encode_f64(field.values));
  write_json(dir / (stem + ".json"), header);
}

template <int N>
ValueField<N> read_value_field(const fs::path& header_path) {
  json h;
  try {
    h = json::parse(read_file(header_path));
  } catch (const json::exception& e) {
    throw IoError(header_path.string() + ": " + e.what());
  }
  if (h.value("format", "") != "hjc-value-field") throw IoError(header_path.string() + ": not a value-field header");
  ValueField<N> f;
  f.grid = grid_from_json<N>(h.at("grid"));
  f.time = h.at("time").get<double>();
  f.horizon = h.at("horizon").get<double>();
  f.discount = h.at("discount").get<double>();
  f.info = info_from_json(h.at("metadata"));
  f.values = decode_f64(read_file(header_path.parent_path() / h.at("payload").get<std::string>()));
  if (f.values.size() != f.grid.size())
    throw IoError(header_path.string() + ": payload has " + std::to_string(f.values.size()) + " values, grid needs " +
                  std::to_string(f.grid.size()));
  return f;
}

// ---------------------------------------------------------------------------
// Clutter configurations and partitions (1-based indices on disk).

template <int N, int D>
json clutter_to_json(const ClutterConfig<N, D>& c) {
  json E = json::array();
  for (int r = 0; r < N; ++r) {
    json row = json::array();
    for (int k = 0; k < D; ++k) row.push_back(c.embedding(r, k));
    E.push_back(row);
  }
  json offs = json::array();
  for (const auto& o : c.offsets) offs.push_back(std::vector<double>(o.data(), o.data() + D));
  return {{"embedding", E}, {"offsets", offs}};
}

template <int N, int D>
ClutterConfig<N, D> clutter_from_json(const json& j) {
  ClutterConfig<N, D> c;
  const auto& E = j.at("embedding");
  if (E.size() != static_cast<std::size_t>(N)) throw IoError("embedding: wrong row count");
  for (int r = 0; r < N; ++r) {
    const auto& row = E.at(static_cast<std::size_t>(r));
    if (row.size() != static_cast<std::size_t>(D)) throw IoError("embedding: wrong column count");
    for (int k = 0; k < D; ++k) c.embedding(r, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  for (const auto& o : j.at("offsets")) {
    if (o.size() != static_cast<std::size_t>(D)) throw IoError("offsets: wrong dimension");
    Vec<D> v;
    for (int k = 0; k < D; ++k) v[k] = o.at(static_cast<std::size_t>(k)).get<double>();
    c.offsets.push_back(v);
  }
  c.validate();
  return c;
}

inline json partition_to_json(const Partition& p) {
  json out = json::array();
  for (const auto& b : p.blocks) {
    json blk = json::array();
    for (std::size_t i : b) blk.push_back(i + 1);
    out.push_back(blk);
  }
  return out;
}

inline Partition partition_from_json(const json& j, std::size_t n) {
  Partition p;
  for (const auto& blk : j) {
    std::vector<std::size_t> b;
    for (const auto& i : blk) {
      const long v = i.get<long>();
      if (v < 1) throw IoError("partition indices are 1-based");
      b.push_back(static_cast<std::size_t>(v - 1));
    }
    p.blocks.push_back(std::move(b));
  }
  p.validate(n);
  return p;
}

// ---------------------------------------------------------------------------
// Reports, slices, trajectories.

inline json report_to_json(const VerificationReport& r) {
  json d = json::object();
  for (const auto& [k, v] : r.details) d[k] = v;
  return {{"property", r.property}, {"probes", r.probes},     {"max_violation", r.max_violation},
          {"tolerance", r.tolerance}, {"witnesses", r.witnesses}, {"pass", r.pass},
          {"details", d},             {"note", r.note}};
}

/// Planar sampling window for slice exports.
struct SliceWindow {
  double x_lower = -2.5, x_upper = 2.5;
  double y_lower = -2.5, y_upper = 2.5;
  int nx = 101, ny = 101;
};

/// CSV with columns x,y,value at heading `theta`, y outer and x inner.
template <typename Fn>
std::string slice_csv(const Fn& value, const SliceWindow& w, double theta) {
  std::ostringstream os;
  os << "x,y,value\n";
  for (int j = 0; j < w.ny; ++j) {
    const double y = w.y_lower + (w.y_upper - w.y_lower) * j / std::max(1, w.ny - 1);
    for (int i = 0; i < w.nx; ++i) {
      const double x = w.x_lower + (w.x_upper - w.x_lower) * i / std::max(1, w.nx - 1);
      os << fmt_double(x) << ',' << fmt_double(y) << ',' << fmt_double(value(Vec<3>(x, y, theta))) << '\n';
    }
  }
  return os.str();
}

template <typename Fn>
void write_slice(const fs::path& csv_path, const Fn& value, const SliceWindow& w, double theta,
                 const json& extra = json::object()) {
  write_file_atomic(csv_path, slice_csv(value, w, theta));
  json side = {{"theta", theta}, {"columns", {"x", "y", "value"}}, {"nx", w.nx}, {"ny", w.ny}};
  for (auto it = extra.begin(); it != extra.end(); ++it) side[it.key()] = it.value();
  fs::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  write_json(sidecar, side);
}

/// Columns t,x,y,theta,u,overridden,composed_value; the terminal row leaves u and
/// overridden empty.
inline std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  os << "t,x,y,theta,u,overridden,composed_value\n";
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const auto& s = tr.states[k];
    os << fmt_double(k * tr.dt) << ',' << fmt_double(s[0]) << ',' << fmt_double(s[1]) << ',' << fmt_double(s[2]) << ',';
    if (k < tr.controls.size())
      os << fmt_double(tr.controls[k]) << ',' << (tr.overridden[k] ? 1 : 0);
    else
      os << ',';
    os << ',' << fmt_double(tr.composed_values[k]) << '\n';
  }
  return os.str();
}

inline json trajectory_summary(const Trajectory& tr) {
  return {{"outcome", to_string(tr.outcome)},
          {"steps", tr.steps()},
          {"override_fraction", tr.override_fraction()},
          {"message", tr.message}};
}

}  // namespace hjc::io
