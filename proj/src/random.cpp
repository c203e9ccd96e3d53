#include "popdiv/random.hpp"

#include <cmath>
#include <numbers>

namespace popdiv {

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

std::size_t Rng::uniform_index(std::size_t n) {
  // Lemire's multiply-shift with rejection of the biased low region.
  const auto bound = static_cast<std::uint64_t>(n);
  std::uint64_t x = next();
  u128 m = static_cast<u128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = next();
      m = static_cast<u128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> parts) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  constexpr std::uint64_t kPrime = 0x100000001B3ULL;
  for (std::string_view part : parts) {
    for (unsigned char c : part) {
      h ^= c;
      h *= kPrime;
    }
    h ^= 0x1F;  // unit separator keeps ("ab","c") distinct from ("a","bc")
    h *= kPrime;
  }
  return splitmix64(splitmix64(base) ^ h);
}

}  // namespace popdiv
