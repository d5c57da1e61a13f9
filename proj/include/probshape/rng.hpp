#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace probshape {

/// Counter-based SplitMix64 stream.
///
/// Every stream is fully determined by its 64-bit key, so substreams keyed by
/// an item index (proposal number, path number) are cheap to create and give
/// the same draws regardless of how the work is batched or scheduled. Uniform
/// and normal variates are produced by explicit formulas so results do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  /// Independent substream identified by `index`.
  [[nodiscard]] Rng split(std::uint64_t index) const {
    return Rng(key_, mix(index + 0x9e3779b97f4a7c15ULL) ^ (key_ << 1));
  }

  std::uint64_t next_u64() {
    counter_ += kGamma;
    return mix(key_ + counter_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Two independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  double normal() { return normal_pair().first; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  Rng(std::uint64_t parent, std::uint64_t salt) : key_(mix(parent ^ mix(salt))) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Substream tags so that different consumers of one seed never overlap.
enum class Stream : std::uint64_t {
  initialization = 1,
  collocation = 2,
  partition_plus = 3,
  partition_minus = 4,
  starts_plus = 5,
  starts_minus = 6,
  exits_plus = 7,
  exits_minus = 8,
  objective = 9,
};

inline Rng substream(const Rng& rng, Stream tag) {
  return rng.split(static_cast<std::uint64_t>(tag));
}

}  // namespace probshape
