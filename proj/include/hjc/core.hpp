#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace hjc {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

template <int N, int D>
using Embedding = Eigen::Matrix<double, N, D>;

inline constexpr double kPi = std::numbers::pi;

/// Thrown when a constructor or operation receives parameters outside its domain.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a state or intermediate quantity is not finite.
class InvalidState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps an angle into [-pi, pi). +pi maps to -pi.
inline double wrap_angle(double a) {
  if (a >= -kPi && a < kPi) return a;
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  w -= kPi;
  // fmod can round to exactly +pi for inputs just below an odd multiple of pi
  if (w >= kPi) w -= 2.0 * kPi;
  return w;
}

template <int N>
bool all_finite(const Vec<N>& x) {
  return x.allFinite();
}

/// Worker count: HJC_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HJC_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return std::min<unsigned>(static_cast<unsigned>(v), hw);
  }
  return hw;
}

/// Runs fn(begin, end) over contiguous chunks of [0, count). Chunks are disjoint, so
/// callers writing to per-index slots need no synchronization.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  unsigned workers = worker_count();
  if (workers <= 1 || count < 4096) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      std::size_t b = w * chunk;
      std::size_t e = std::min(count, b + chunk);
      if (b >= e) break;
      pool.emplace_back([&, w, b, e] {
        try {
          fn(b, e);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace hjc
