#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tempowarp {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Invalid configuration (bad bounds, impossible shapes requested, ...).
/// CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: shape mismatches, malformed files, out-of-range values.
/// CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical divergence during training (non-finite loss or gradients).
/// CLI exit code 4.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic random stream. All sampling goes through explicit Rng
/// instances so that every pipeline is reproducible from a single seed.
/// The float mappings are fixed here (not delegated to std:: distributions,
/// whose output is implementation-defined) so streams are portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; generates pairs, caches the spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // 53-bit multiply-shift keeps this unbiased for any realistic n.
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }

  /// Independent child stream (e.g. one per worker or per record).
  Rng fork() { return Rng(gen_() ^ 0x9e3779b97f4a7c15ull); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Runs fn(i) for i in [0, n) across at most `threads` workers with a static
/// block partition. Each index writes only its own outputs, so results are
/// identical to the serial order regardless of the thread count.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (n <= 0) return;
  int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk;
    int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline int default_thread_count() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace tempowarp
