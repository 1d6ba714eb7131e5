#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dloss {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t value) noexcept {
    return mix_seed(seed ^ mix_seed(value));
}

/// FNV-1a, stable across platforms (std::hash is not).
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Independent named sub-streams of one seed.
enum class Stream : std::uint64_t {
    data = 1,
    coefficients = 2,
    folds = 3,
    init = 4,
    tuples = 5,
    dropout = 6,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
    return Rng(combine_seed(seed, static_cast<std::uint64_t>(stream)));
}

}  // namespace dloss
