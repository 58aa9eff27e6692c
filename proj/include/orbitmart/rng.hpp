#pragma once

#include <cstdint>
#include <limits>

namespace orbitmart {

/// Counter-based generator: the i-th output is the SplitMix64 finalizer of
/// key + i * golden. Streams are split by hashing (key, index) into a new key,
/// so any replication or substream is reachable without advancing another.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0) noexcept : key_(mix(seed ^ kSeedSalt)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix(key_ + kGolden * ++counter_); }

  /// Independent child stream identified by `index`.
  CounterRng split(std::uint64_t index) const noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x6f72626974ULL;

  struct FromKey {};
  CounterRng(FromKey, std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Substream labels shared by the CLI and the simulation harness.
namespace substream {
inline constexpr std::uint64_t kTheta = 1;
inline constexpr std::uint64_t kData = 2;
inline constexpr std::uint64_t kReplication = 3;
}  // namespace substream

}  // namespace orbitmart
