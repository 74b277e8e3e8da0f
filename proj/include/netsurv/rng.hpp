#pragma once

#include <cstdint>
#include <random>

namespace netsurv {

/// Independent generator number `index` derived from `seed`, so work can be
/// split into streams that do not depend on evaluation order.
std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t index);

/// Unbiased integer in [0, n) from a 64-bit engine (Lemire's method).
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace netsurv
