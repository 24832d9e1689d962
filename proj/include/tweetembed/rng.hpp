#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace tweetembed {

// SplitMix64. Every seeded decision in the toolkit (parameter init, dataset
// splits, epoch order, synthetic corpora) draws from this generator through
// the helpers below, so a seed means the same thing on every platform.
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Top 53 bits scaled into [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound). Draws at or above the largest multiple of
  // bound are rejected, so there is no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t r = next();
    while (r >= limit) r = next();
    return r % bound;
  }

 private:
  std::uint64_t state_;
};

// Independent stream for (seed, stream): one SplitMix64 output of
// seed ^ (stream * golden ratio constant).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 mix(seed ^ (stream * 0x9E3779B97F4A7C15ULL));
  return mix.next();
}

// Fisher-Yates, walking from the back: swap item i with item below(i + 1).
template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace tweetembed
