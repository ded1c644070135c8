#pragma once

#include <cstdint>

namespace peel {

// Counter-based splittable random stream. Every draw is a pure function of
// (key, counter), so substreams derived from (seed, path) reproduce exactly
// regardless of scheduling. Mixing is a double SplitMix64 finalizer.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

  // Derives an independent substream; `tag` identifies the child.
  RngStream child(std::uint64_t tag) const {
    RngStream s;
    s.key_ = mix(key_ ^ mix(tag + 0x632be59bd9b4e019ull));
    return s;
  }

  std::uint64_t next_u64() {
    std::uint64_t x = key_ + (++ctr_) * 0xbf58476d1ce4e5b9ull;
    return mix(mix(x) ^ key_);
  }

  // Uniform on [0,1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return next_unit() < p; }

  std::uint64_t state_key() const { return key_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
};

}  // namespace peel
