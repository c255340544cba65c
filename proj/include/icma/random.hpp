#pragma once

#include <cstdint>
#include <random>

namespace icma {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream, index); used so that replicate i draws
// the same numbers regardless of which worker runs it.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return Rng(derive_seed(seed, stream, index));
}

// Stream tags.
inline constexpr std::uint64_t kStreamBootstrap = 0xB0075;
inline constexpr std::uint64_t kStreamGenerate = 0x6E4E;
inline constexpr std::uint64_t kStreamPermutation = 0x9E12;
inline constexpr std::uint64_t kStreamTuckerInit = 0x7C4E;

}  // namespace icma
