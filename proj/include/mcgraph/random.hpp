#pragma once

#include <cstdint>
#include <random>

namespace mcgraph {

using Rng = std::mt19937_64;

/// Independent, reproducible stream for (seed, stream) pairs. Different
/// stream ids keep e.g. weight init and negative sampling decoupled.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

namespace stream {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kSubsample = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kSampling = 4;
inline constexpr std::uint64_t kPredictor = 5;
inline constexpr std::uint64_t kSynthetic = 6;
}  // namespace stream

}  // namespace mcgraph
