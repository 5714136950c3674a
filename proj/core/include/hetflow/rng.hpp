#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hetflow {

/// Deterministic random source. Wraps a fixed-width engine and provides a
/// Gaussian draw with a pinned algorithm, so that streams are reproducible
/// across platforms and standard-library versions (std::normal_distribution
/// is implementation-defined).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() {
    return std::generate_canonical<double, 53>(engine_);
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal draw via Box-Muller. One draw consumes two uniforms;
  /// no spare is cached, so the stream position is a pure function of the
  /// number of calls.
  double gaussian();

  /// Normal draw with the given mean and standard deviation.
  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  std::uint64_t next_u64() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

/// FNV-1a over a byte string; stable across platforms.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

/// Derive a child seed from a parent seed and a label. Used to give each
/// task/worker an independent, schedule-invariant random stream.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);

} // namespace hetflow
