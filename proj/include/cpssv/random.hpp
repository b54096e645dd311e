#pragma once

#include <cstdint>
#include <limits>

namespace cpssv {

/// Counter-based 64-bit random stream.
///
/// Draw n of a stream with key K is `splitmix64_mix(K + (n + 1) * 0x9E3779B97F4A7C15)`,
/// i.e. the SplitMix64 output function applied to a Weyl sequence. A stream is fully
/// described by (key, counter), so substreams for runs and agent instances are obtained by
/// hashing identifiers into the key; streams with different keys never share state.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream() = default;
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  /// Substream keyed by (seed, a, b). Used as (seed, run) for runs and
  /// (run-key, instance) for agent instances.
  static RandomStream derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t k = mix(seed ^ 0x6A09E667F3BCC909ULL);
    k = mix(k ^ (a + 0xBB67AE8584CAA73BULL));
    k = mix(k ^ (b + 0x3C6EF372FE94F82BULL));
    return RandomStream(k);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    ++counter_;
    return mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }
  result_type operator()() { return next(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform double in [0, 1) with 53 bits of precision; one draw.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n > 0; one draw (multiply-shift, bias < 2^-64 * n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t draws() const { return counter_; }

  friend bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace cpssv
