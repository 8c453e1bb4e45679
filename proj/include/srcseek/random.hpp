#pragma once

#include <cstdint>
#include <random>

namespace srcseek {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class StreamKind : std::uint64_t {
  kDecider = 1,
  kMicNoise = 2,
  kFieldNoise = 3,
  kStart = 4,
  kInitialWaypoint = 5,
};

/// Global streams use this pseudo robot id.
inline constexpr int kGlobalStream = -1;

/// Seed of the stream (kind, robot) under a master seed:
///   splitmix64(splitmix64(master) ^ splitmix64(kind << 32 | (robot + 1)))
/// A stream depends only on its own (kind, robot) key, so adding robots never
/// perturbs existing streams.
constexpr std::uint64_t stream_seed(std::uint64_t master, StreamKind kind, int robot) {
  const auto key = (static_cast<std::uint64_t>(kind) << 32) |
                   static_cast<std::uint32_t>(robot + 1);
  return splitmix64(splitmix64(master) ^ splitmix64(key));
}

inline Rng make_stream(std::uint64_t master, StreamKind kind, int robot = kGlobalStream) {
  return Rng{stream_seed(master, kind, robot)};
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace srcseek
