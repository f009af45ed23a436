#pragma once

#include <cstdint>
#include <random>

#include "rbpomdp/core/types.hpp"

namespace rbpomdp {

/// Seedable random stream. Every source of randomness in the library takes an
/// Rng by reference; nothing touches global random state.
///
/// Streams are single-owner. Workers that need their own randomness get a
/// child stream via child(), which depends only on the seed and the child id,
/// never on how many numbers the parent already produced.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Deterministic child stream number `id` of this stream's seed.
  Rng child(std::uint64_t id) const;

  /// Child stream seeded from the next draw of this stream.
  Rng split();

  double uniform();  // [0, 1)
  double normal();   // N(0, 1)
  std::size_t uniform_index(std::size_t n);
  Vector normal_vector(Eigen::Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace rbpomdp
