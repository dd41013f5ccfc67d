/**
 * @file rng.hpp
 * @brief Seeded random sources and stream derivation.
 */

#pragma once

#include <cstdint>
#include <random>

namespace prenas {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser. Used to hash seeds and landscape coefficients.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream seed for (seed, stream). Distinct streams never share state.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng{derive_seed(seed, stream)};
}

/// Uniform in [0, 1) from a 64-bit hash value.
constexpr double unit_from_hash(std::uint64_t h) noexcept {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace prenas
