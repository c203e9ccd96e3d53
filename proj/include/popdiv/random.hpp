#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <random>
#include <string_view>
#include <utility>

namespace popdiv {

/// Seeded generator with platform-independent derived draws.
///
/// std::mt19937_64's raw output is fixed by the standard, but the standard
/// distributions are not, so every derived draw (uniform reals, bounded
/// integers, normals, shuffles) is implemented here. All randomness in the
/// toolkit goes through this class so that identical seeds reproduce
/// identical manifests and reports on any conforming compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Unbiased integer on [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Standard normal via Box-Muller; consumes two raw draws per call.
  double normal();

  bool bernoulli(double p) { return uniform01() < p; }

  /// Fisher-Yates shuffle.
  template <std::random_access_iterator It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = uniform_index(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and a tuple of labels.
/// Labels are hashed with FNV-1a (with a separator between parts) and mixed
/// with the base through splitmix64.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> parts);

}  // namespace popdiv
