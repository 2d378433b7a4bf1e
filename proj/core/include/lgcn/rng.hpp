#pragma once

#include <cstdint>
#include <random>

namespace lgcn {

// Seeded pseudo-random source. Wraps mt19937_64 (whose output sequence is
// fixed by the standard) and derives bounded integers and reals itself so
// that draws are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, n). Requires n > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

// Independent stream seed for a given purpose (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace lgcn
