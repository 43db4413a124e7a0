#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "bridger/error.h"

namespace bridger {

// Deterministic random source. Distributions are built from raw mt19937_64
// draws instead of std:: distributions, whose output is implementation
// defined; every stream here is reproducible from the seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  int uniform_int(int n) {
    if (n <= 0) throw Error("uniform_int: n must be positive");
    const auto un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  // Standard normal via Box-Muller; a fresh pair of uniforms per call so the
  // draw count is predictable.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    constexpr double kTwoPi = 6.28318530717958647692;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  // Normal(0, stddev) resampled until within `cut` standard deviations.
  double truncated_normal(double stddev, double cut = 2.0) {
    double z;
    do {
      z = normal();
    } while (std::abs(z) > cut);
    return z * stddev;
  }

  template <class V>
  void shuffle(V& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      const int j = uniform_int(i + 1);
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  }

  // n distinct values from [0, pool), without replacement (partial
  // Fisher-Yates). Result order is the draw order.
  std::vector<int> sample_without_replacement(int pool, int n) {
    if (n > pool) throw Error("sample_without_replacement: n > pool");
    std::vector<int> idx(static_cast<std::size_t>(pool));
    for (int i = 0; i < pool; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int j = i + uniform_int(pool - i);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      out.push_back(idx[static_cast<std::size_t>(i)]);
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace bridger
