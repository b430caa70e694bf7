#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "sembench/hash.hpp"

namespace sembench {

// Identifier of the permutation scheme, recorded in baseline reports.
// std::mt19937_64 has a standard-specified output sequence and the shuffle
// below uses rejection sampling instead of std::uniform_int_distribution
// (whose mapping is implementation-defined), so permutations reproduce
// bit-for-bit across compilers and platforms.
inline constexpr std::string_view kPermutationRngId =
    "mt19937_64/fisher-yates-rejection";

// Uniform draw from [0, n). Rejection sampling keeps it unbiased.
inline std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = rng();
    while (x >= limit) {
        x = rng();
    }
    return x % n;
}

// Fisher-Yates with the portable draw above.
template <typename T>
void portable_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[bounded_uniform(rng, i)]);
    }
}

// Substream seed for (seed, label, index), e.g. one permutation stream per
// (query, sample). Parallel and serial evaluation then agree.
inline std::uint64_t derive_stream_seed(std::uint64_t seed,
                                        std::string_view label,
                                        std::uint64_t index) {
    return splitmix64(splitmix64(seed ^ fnv1a64(label)) ^ index);
}

} // namespace sembench
