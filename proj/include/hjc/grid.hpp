#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hjc/core.hpp"

namespace hjc {

/// One grid dimension. Periodic axes identify `upper` with `lower`, so the node at
/// `upper` is not stored and spacing is (upper - lower) / count.
struct Axis {
  double lower = 0.0;
  double upper = 1.0;
  int count = 2;
  bool periodic = false;

  double spacing() const { return periodic ? (upper - lower) / count : (upper - lower) / (count - 1); }
  double node(int k) const { return lower + k * spacing(); }
};

/// Fractional positions closer than this to a node are snapped onto it, so queries at
/// node coordinates reproduce stored values exactly.
inline constexpr double kNodeSnap = 1e-9;

template <int N>
struct Grid {
  std::array<Axis, N> axes{};

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.count);
    return n;
  }

  /// Row-major: the last dimension varies fastest.
  std::array<std::size_t, N> strides() const {
    std::array<std::size_t, N> s{};
    std::size_t acc = 1;
    for (int k = N; k-- > 0;) {
      s[k] = acc;
      acc *= static_cast<std::size_t>(axes[k].count);
    }
    return s;
  }

  std::array<int, N> unflatten(std::size_t flat) const {
    std::array<int, N> idx{};
    for (int k = N; k-- > 0;) {
      idx[k] = static_cast<int>(flat % static_cast<std::size_t>(axes[k].count));
      flat /= static_cast<std::size_t>(axes[k].count);
    }
    return idx;
  }

  std::size_t flatten(const std::array<int, N>& idx) const {
    std::size_t flat = 0;
    for (int k = 0; k < N; ++k) flat = flat * static_cast<std::size_t>(axes[k].count) + static_cast<std::size_t>(idx[k]);
    return flat;
  }

  Vec<N> node(std::size_t flat) const {
    const auto idx = unflatten(flat);
    Vec<N> x;
    for (int k = 0; k < N; ++k) x[k] = axes[k].node(idx[k]);
    return x;
  }

  Vec<N> spacing() const {
    Vec<N> s;
    for (int k = 0; k < N; ++k) s[k] = axes[k].spacing();
    return s;
  }

  /// True when the node lies on the outer face of some non-periodic dimension.
  bool on_boundary(std::size_t flat) const {
    const auto idx = unflatten(flat);
    for (int k = 0; k < N; ++k)
      if (!axes[k].periodic && (idx[k] == 0 || idx[k] == axes[k].count - 1)) return true;
    return false;
  }
};

template <int N>
Grid<N> build_grid(const std::array<Axis, N>& axes) {
  for (const auto& a : axes) {
    if (a.count < 2) throw InvalidParameter("build_grid: every axis needs at least 2 nodes");
    if (!std::isfinite(a.lower) || !std::isfinite(a.upper) || !(a.lower < a.upper))
      throw InvalidParameter("build_grid: bounds must be finite with lower < upper");
  }
  return Grid<N>{axes};
}

/// Multilinear interpolation weights for one query point.
template <int N>
struct Stencil {
  std::array<std::int32_t, N> lo{};
  std::array<std::int32_t, N> hi{};
  std::array<double, N> w{};
  bool outside = false;
};

template <int N>
Stencil<N> make_stencil(const Grid<N>& grid, const Vec<N>& x) {
  Stencil<N> st;
  for (int k = 0; k < N; ++k) {
    const Axis& a = grid.axes[k];
    double s = (x[k] - a.lower) / a.spacing();
    const double r = std::round(s);
    if (std::abs(s - r) < kNodeSnap) s = r;
    if (a.periodic) {
      s = std::fmod(s, static_cast<double>(a.count));
      if (s < 0.0) s += a.count;
      int i0 = static_cast<int>(std::floor(s));
      if (i0 >= a.count) i0 = a.count - 1;
      st.lo[k] = i0;
      st.hi[k] = (i0 + 1) % a.count;
      st.w[k] = s - i0;
    } else {
      if (s < 0.0 || s > a.count - 1) {
        st.outside = true;
        return st;
      }
      int i0 = std::min(static_cast<int>(std::floor(s)), a.count - 2);
      st.lo[k] = i0;
      st.hi[k] = i0 + 1;
      st.w[k] = s - i0;
    }
  }
  return st;
}

/// Outside stencils evaluate to zero (extension by zero).
template <int N>
double apply_stencil(const std::vector<double>& values, const Stencil<N>& st, const std::size_t* strides) {
  if (st.outside) return 0.0;
  double acc = 0.0;
  for (unsigned corner = 0; corner < (1u << N); ++corner) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (int k = 0; k < N; ++k) {
      const bool up = (corner >> (N - 1 - k)) & 1u;
      weight *= up ? st.w[k] : 1.0 - st.w[k];
      flat += static_cast<std::size_t>(up ? st.hi[k] : st.lo[k]) * strides[k];
    }
    if (weight != 0.0) acc += weight * values[flat];
  }
  return acc;
}

template <int N>
double interpolate_values(const Grid<N>& grid, const std::vector<double>& values, const Vec<N>& x) {
  if (!x.allFinite()) throw InvalidState("interpolate: non-finite query");
  const auto strides = grid.strides();
  return apply_stencil(values, make_stencil(grid, x), strides.data());
}

}  // namespace hjc
