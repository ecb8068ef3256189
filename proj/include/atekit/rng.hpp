#pragma once

#include <cstdint>
#include <random>

namespace atekit {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; decorrelates nearby integers.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent stream keyed by (seed, tag, index). Tasks that
/// run concurrently each derive their own stream so results never depend on
/// scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(mix64(seed) ^ tag) ^ index);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, tag, index));
}

// Stream tags.
namespace stream {
inline constexpr std::uint64_t cv_folds = 0x11;
inline constexpr std::uint64_t forest_tree = 0x21;
inline constexpr std::uint64_t dml_folds = 0x31;
inline constexpr std::uint64_t bootstrap = 0x41;
inline constexpr std::uint64_t half_sample = 0x51;
inline constexpr std::uint64_t cov_split = 0x61;
inline constexpr std::uint64_t nuisance = 0x71;
inline constexpr std::uint64_t synthetic = 0x81;
inline constexpr std::uint64_t simulate = 0x91;
inline constexpr std::uint64_t report = 0xa1;
inline constexpr std::uint64_t estimator = 0xb1;
}  // namespace stream

}  // namespace atekit
