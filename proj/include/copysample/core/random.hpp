#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "copysample/core/types.hpp"

namespace copysample {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  return mix64(seed ^ mix64(fnv1a(stream)));
}

/// Seeded pseudo-random stream.
///
/// The engine is mt19937_64, whose output sequence is fixed by the C++
/// standard. The distributions are implemented here rather than taken from
/// <random> because the standard leaves their algorithms unspecified, so the
/// same seed yields the same draws with every toolchain.
class RandomSource {
 public:
  static constexpr std::string_view algorithm_id = "mt19937_64/copysample-v1";

  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling removes modulo bias.
  std::uint64_t index(std::uint64_t n) {
    if (n == 0) throw PreconditionError("RandomSource::index: empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Poisson draw. Knuth's product method on chunks of the rate, summed.
  std::int64_t poisson(double rate) {
    if (!(rate >= 0.0)) throw PreconditionError("RandomSource::poisson: negative rate");
    std::int64_t total = 0;
    while (rate > 0.0) {
      const double chunk = std::min(rate, 256.0);
      rate -= chunk;
      const double threshold = std::exp(-chunk);
      double p = uniform();
      while (p > threshold) {
        ++total;
        p *= uniform();
      }
    }
    return total;
  }

  Point uniform_point(int dim) {
    Point z(dim);
    for (int i = 0; i < dim; ++i) z[i] = uniform();
    return z;
  }

  Point normal_vector(int dim) {
    Point z(dim);
    for (int i = 0; i < dim; ++i) z[i] = normal();
    return z;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  /// k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> subset(std::size_t n, std::size_t k) {
    if (k > n) throw PreconditionError("RandomSource::subset: k > n");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(idx[i], idx[i + index(n - i)]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Draws a point uniformly from the hypercube.
inline Point uniform_sample(const SampleSpace& space, RandomSource& rng) { return rng.uniform_point(space.dim()); }

}  // namespace copysample
