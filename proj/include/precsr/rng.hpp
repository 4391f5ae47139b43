#pragma once

#include <cstdint>
#include <random>

namespace precsr {

// SplitMix64 finalizer. Fixed constants; changing them invalidates every frozen
// seed-dependent expectation in the test suite.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Documented substream rule: stream k of a master seed. Streams 0 and 1 are
// reserved (base pattern, shared pretraining); replicate r draws its pattern
// from substream 2r+2 and its pretraining from substream 2r+3, so the two are
// independent of each other and of every other replicate.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t k) {
  return splitmix64(master ^ splitmix64(k + 0x9E3779B97F4A7C15ull));
}

// Thin deterministic wrapper over mt19937_64. uniform01 uses the top 53 bits so
// the mapping to doubles is reproducible and strictly below 1.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  std::int64_t poisson(double mean) {
    return std::poisson_distribution<std::int64_t>(mean)(gen_);
  }

  // Index in [0, n): floor of a uniform01 scale. The 2^-53 modulo bias is far
  // below anything observable at the stream lengths used here.
  std::size_t index_below(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return i >= n ? n - 1 : i;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace precsr
