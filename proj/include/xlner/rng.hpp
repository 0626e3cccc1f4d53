#ifndef XLNER_RNG_HPP_
#define XLNER_RNG_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace xlner {

// SplitMix64 (Steele, Lea & Flood). 64-bit state, one add and three
// xor-shift-multiply rounds per draw. Every random decision in the toolkit
// (splits, shuffles, initialization, synthetic data) goes through this
// generator so results are reproducible across platforms; we avoid
// <random> distributions because their output is implementation-defined.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Lemire-style rejection keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  double normal() {
    // Box-Muller; one value per call keeps the stream simple.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Fisher-Yates with SplitMix64; the permutation is a pure function of the
// seed and the length.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

// Derives an independent stream for a named sub-purpose.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  SplitMix64 mix(seed ^ (salt * 0xD1B54A32D192ED03ULL));
  return mix.next();
}

}  // namespace xlner

#endif  // XLNER_RNG_HPP_
