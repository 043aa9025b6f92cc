#pragma once

// Counter-based 64-bit generator with explicit stream derivation.
//
// Output j of a stream with key k is mix64(k + (j + 1) * kGolden), where
// mix64 is the SplitMix64 finalizer. The key of stream s under seed S is
// stream_key(S, s) = mix64(S ^ mix64((s + 1) * kGolden)). Replication i of a
// Monte Carlo study draws its design from stream 2i and its noise from
// stream 2i + 1.

#include <cstdint>

namespace rlpa {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64((stream + 1) * kGolden));
}

constexpr std::uint64_t design_stream(std::uint64_t replication) { return 2 * replication; }
constexpr std::uint64_t noise_stream(std::uint64_t replication) { return 2 * replication + 1; }

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr CounterRng stream(std::uint64_t seed, std::uint64_t index) {
    return CounterRng(stream_key(seed, index));
  }

  constexpr std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  constexpr double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rlpa
