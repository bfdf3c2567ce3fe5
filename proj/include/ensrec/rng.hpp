#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace ensrec {

// SplitMix64 (Steele, Lea & Flood). Pinned so that fold assignments are
// reproducible across platforms and languages.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound) by rejecting the lowest (2^64 mod bound) outputs.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Fisher-Yates from the back: for i = n-1 .. 1 swap v[i] with v[below(i+1)].
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Seed of fold `fold`: the (fold + 1)-th output of SplitMix64(seed).
inline std::uint64_t derive_fold_seed(std::uint64_t seed, int fold) {
  SplitMix64 g(seed);
  std::uint64_t out = 0;
  for (int i = 0; i <= fold; ++i) out = g.next();
  return out;
}

}  // namespace ensrec
