#pragma once

#include <cstdint>

namespace mst {

/// Counter-based SplitMix64 stream.
///
/// Output i of a stream is `mix64(key + (i + 1) * golden_gamma)`, so a draw depends
/// only on (key, counter) and never on what other streams did. `split` derives a
/// child key from (key, stream index); repetition r of a run with seed s always
/// uses `CounterRng::derived(s, r)` whichever thread executes it.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix64(seed)) {}

  static CounterRng derived(std::uint64_t seed, std::uint64_t index) {
    return CounterRng(seed).split(index);
  }

  CounterRng split(std::uint64_t stream) const {
    CounterRng child(0);
    child.key_ = mix64(key_ ^ mix64(stream + kGamma));
    return child;
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Box-Muller; consumes exactly two draws per call.
  double normal(double mean, double sigma);

  /// Lognormal parameterised by its arithmetic mean and coefficient of variation.
  /// cv == 0 returns `mean` without consuming a draw.
  double lognormal(double mean, double cv);

  std::uint64_t counter() const { return counter_; }

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mst
