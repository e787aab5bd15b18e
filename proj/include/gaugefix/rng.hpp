#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "gaugefix/linalg.hpp"

namespace gaugefix {

// Seeded random stream. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; the uniform and normal transforms are implemented
// here rather than taken from <random> because the standard distributions are
// not required to produce the same values across library implementations.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm =
      "mt19937_64; uniform = top 53 bits / 2^53; normal = Marsaglia polar";

  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

RngStream seeded_rng(std::uint64_t seed);

// n i.i.d. draws from N(0, stddev^2). Throws std::invalid_argument for stddev < 0.
Vector gaussian(RngStream& rng, std::size_t n, double stddev);

// Derives a child seed from (parent, stream) with a splitmix64 finalizer, so
// per-run streams are decorrelated even for consecutive parent seeds.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

}  // namespace gaugefix
