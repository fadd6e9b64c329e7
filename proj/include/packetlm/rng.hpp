#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace packetlm {

// mt19937_64 is bit-exact per the standard; the helpers below avoid
// std::uniform_int_distribution / std::normal_distribution, whose outputs
// differ between standard library implementations.
using Rng = std::mt19937_64;

// Unbiased integer in [0, n) by rejection.
inline uint64_t uniform_below(Rng& rng, uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// 53-bit uniform in [0, 1).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller. No cached spare: each call consumes a
// fresh pair of uniforms, so draw sequences are position-independent.
inline double gaussian(Rng& rng) {
    double u1 = 1.0 - uniform01(rng); // (0, 1], keeps log finite
    double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(uniform_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// Decorrelates per-purpose RNG streams derived from one user seed.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace packetlm
