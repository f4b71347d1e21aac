#pragma once

/*
 * Deterministic counter-based random streams.
 *
 * Each stream is identified by a (seed, id_a, id_b) triple; the n-th output of
 * a stream is a pure function of (seed, id_a, id_b, n).  Work split across
 * threads by stream id therefore produces byte-identical results regardless of
 * the number of workers or the order in which streams are consumed.
 *
 * The word generator is the SplitMix64 finalizer applied to a Weyl sequence
 * whose start is derived from the stream key by two extra mixing rounds.
 */

#include <cstdint>

#include "renorm/numeric.hpp"

namespace renorm {

namespace detail {

/// SplitMix64 output finalizer: a bijective mix with good avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Stateless-keyed random stream: 64-bit words, uniform integers below a
/// BigInt bound (by rejection), and uniform doubles in [0,1).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t id_a = 0, std::uint64_t id_b = 0) {
    std::uint64_t k = detail::mix64(seed + 0x9e3779b97f4a7c15ull);
    k = detail::mix64(k ^ detail::mix64(id_a + 0xbf58476d1ce4e5b9ull));
    k = detail::mix64(k ^ detail::mix64(id_b + 0x94d049bb133111ebull));
    base_ = k;
  }

  /// Next 64-bit word.
  std::uint64_t next_u64() {
    return detail::mix64(base_ + (counter_++) * 0x9e3779b97f4a7c15ull);
  }

  /// Uniform double in [0,1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) for bound >= 1, exact by rejection
  /// sampling on the smallest covering power of two.
  BigInt next_below(const BigInt& bound) {
    if (bound <= 0) throw internal_error("next_below: bound must be positive");
    if (bound == 1) return BigInt(0);
    const unsigned bits = static_cast<unsigned>(boost::multiprecision::msb(bound)) + 1;
    const unsigned words = (bits + 63) / 64;
    const unsigned top_bits = bits - 64 * (words - 1);
    const std::uint64_t top_mask =
        top_bits >= 64 ? ~0ull : ((std::uint64_t{1} << top_bits) - 1);
    for (;;) {
      BigInt r = 0;
      for (unsigned w = 0; w < words; ++w) {
        std::uint64_t word = next_u64();
        if (w + 1 == words) word &= top_mask;
        r |= BigInt(word) << (64 * w);
      }
      if (r < bound) return r;
    }
  }

  /// Uniform integer in [0, bound) for a machine-word bound.
  std::uint64_t next_below_u64(std::uint64_t bound) {
    if (bound == 0) throw internal_error("next_below_u64: bound must be positive");
    if ((bound & (bound - 1)) == 0) return next_u64() & (bound - 1);
    const std::uint64_t limit = ~0ull - ~0ull % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r < limit) return r % bound;
    }
  }

 private:
  std::uint64_t base_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace renorm
