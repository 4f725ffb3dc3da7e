// Seeded random source used everywhere randomness is needed (parameter
// initialisation, dataset shuffling, augmentation draws, fuzz payloads).
//
// std::mt19937_64 output is fully specified by the standard; the helpers
// below derive doubles and bounded integers from it without going through
// the implementation-defined std distributions, so draws are identical
// across standard libraries.
#ifndef ABCD_RANDOM_HPP
#define ABCD_RANDOM_HPP

#include <cstdint>
#include <random>

namespace abcd {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

class Rng {
 public:
  explicit Rng(std::uint64_t seed = kDefaultSeed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n), rejection sampled; n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Uniform integer on [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace abcd

#endif  // ABCD_RANDOM_HPP
