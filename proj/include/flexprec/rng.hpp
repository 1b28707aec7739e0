// SPDX-License-Identifier: Apache-2.0
//
// Seed derivation for reproducible, order-independent random streams.

#ifndef FLEXPREC_RNG_HPP
#define FLEXPREC_RNG_HPP

#include <cstdint>
#include <random>

namespace flexprec {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of stream `index` under `master`. Any stream can be produced without
/// generating the ones before it.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0xD1B54A32D192ED03ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed)
{
    return std::mt19937_64(splitmix64(seed));
}

} // namespace flexprec

#endif
