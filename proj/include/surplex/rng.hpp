#pragma once

#include <cstdint>
#include <initializer_list>

namespace surplex {

// splitmix64. Small, fast, and identical on every platform, which is the
// point: std::mt19937 + std::*_distribution give implementation-defined
// streams, and run outputs here must be byte-stable across machines.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Rejection-sampled, so unbiased.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream seed from a master seed and a path of
// indices (e.g. {repeat, step, prompt}). Feeding each component through a
// full splitmix64 round keeps nearby paths decorrelated.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  Rng mix(master);
  std::uint64_t s = mix.next_u64();
  for (std::uint64_t p : path) {
    Rng step(s ^ (p + 0x9e3779b97f4a7c15ULL));
    s = step.next_u64();
  }
  return s;
}

}  // namespace surplex
