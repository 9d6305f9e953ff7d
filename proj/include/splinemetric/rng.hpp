#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace splinemetric {

/// Identifier of the Gaussian draw algorithm, recorded in run reports so a
/// report documents how its noise was produced.
inline constexpr const char* kGaussianGeneratorId = "mt19937-64/box-muller/v1";

/// Derives an independent stream seed from a master seed (splitmix64 mix).
std::uint64_t subseed(std::uint64_t master, std::uint64_t stream);

/// Deterministic random source. Distributions are built on the raw
/// mt19937-64 output rather than std::*_distribution, whose sequences are
/// implementation-defined; the sequences here are identical on every
/// platform for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1).
  double uniform();

  /// Standard normal via Box-Muller on the uniform stream.
  double gaussian();

  /// Unbiased uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace splinemetric
