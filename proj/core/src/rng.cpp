#include "hetflow/rng.hpp"

#include <cmath>
#include <numbers>

namespace hetflow {

double Rng::gaussian() {
  // Box-Muller, cosine branch. u1 is kept away from 0 so log() is finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0)
    u1 = 5e-324;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
  std::uint64_t h = fnv1a(label);
  // splitmix64-style finalizer over the combined value
  std::uint64_t z = parent ^ (h + 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

} // namespace hetflow
