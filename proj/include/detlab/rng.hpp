#pragma once

#include <cstdint>

namespace detlab {

/// Finalizer from the SplitMix64 generator (Steele, Lea, Flood).  Bijective
/// on 64-bit words; used both as the output scrambler and to key substreams.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// SplitMix64: a counter-based generator.  The whole sequence is a pure
/// function of the initial state, so copies are cheap and there is no hidden
/// shared state.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) : state_(state) {}

  constexpr std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next(); }

 private:
  std::uint64_t state_;
};

/// Derives the generator for substream `stream` of a master `seed`.
///
/// Every independently consumed stream in this codebase (one per Monte Carlo
/// sample) is keyed this way.  Because the key depends only on (seed,
/// stream) and never on how work is partitioned, splitting a run into any
/// number of shards reproduces the exact same draws per sample.
inline constexpr SplitMix64 substream(std::uint64_t seed, std::uint64_t stream) {
  return SplitMix64(mix64(mix64(seed) ^ mix64(stream ^ 0x5851f42d4c957f2dULL)));
}

/// Serves two uniform bits per request out of 64-bit words, least
/// significant pair first.  Word consumption order is part of the
/// reproducibility contract.
class BitPairStream {
 public:
  explicit BitPairStream(SplitMix64 gen) : gen_(gen) {}

  /// Next two uniform bits as a value in {0,1,2,3} (b1b0).
  std::uint32_t next_pair() {
    if (remaining_ == 0) {
      word_ = gen_.next();
      remaining_ = 32;
    }
    const std::uint32_t pair = static_cast<std::uint32_t>(word_ & 3u);
    word_ >>= 2;
    --remaining_;
    return pair;
  }

 private:
  SplitMix64 gen_;
  std::uint64_t word_ = 0;
  int remaining_ = 0;
};

}  // namespace detlab
