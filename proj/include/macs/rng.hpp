#pragma once

#include <cstdint>
#include <random>

namespace macs {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent stream seeds from a base
// seed so that unrelated consumers never share a generator.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return mix_seed(mix_seed(mix_seed(base) ^ stream) ^ index);
}

// Named streams. Keeping them distinct is what lets augmentation run without
// perturbing the factual trajectory.
namespace streams {
inline constexpr std::uint64_t kEnvEpisode = 1;
inline constexpr std::uint64_t kAgent = 2;
inline constexpr std::uint64_t kAgentInit = 3;
inline constexpr std::uint64_t kCounterfactual = 4;
inline constexpr std::uint64_t kCounterfactualInit = 5;
inline constexpr std::uint64_t kStage2Env = 6;
inline constexpr std::uint64_t kEvaluation = 7;
inline constexpr std::uint64_t kMask = 8;
inline constexpr std::uint64_t kExpertPretrain = 9;
}  // namespace streams

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace macs
