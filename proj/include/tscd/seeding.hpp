#pragma once

#include <cstdint>

namespace tscd {

/// splitmix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-trial seed from a master seed, a stream tag, and a counter. Distinct
/// streams (calibration, validation, delay runs) never share trial seeds.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                           std::uint64_t index) noexcept {
  return mix64(mix64(master ^ mix64(stream)) + index);
}

namespace streams {
inline constexpr std::uint64_t kDelayRuns = 1;
inline constexpr std::uint64_t kCalibrateB = 2;
inline constexpr std::uint64_t kCalibrateH = 3;
inline constexpr std::uint64_t kValidation = 4;
inline constexpr std::uint64_t kTrace = 5;
}  // namespace streams

}  // namespace tscd
