#pragma once

#include <cstdint>
#include <random>

namespace usscan {

// Uniform helpers with a fixed bit-level mapping, so streams do not depend
// on the standard library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
    return (rng() >> 11) * (1.0 / 9007199254740992.0);  // 53-bit mantissa
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Fisher-Yates over [0, n) index vectors.
template <typename Vec>
void shuffle_indices(Vec& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = rng() % i;
        std::swap(v[i - 1], v[j]);
    }
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 over master ^ index keeps derived streams decorrelated.
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace usscan
