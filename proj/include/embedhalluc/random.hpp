#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace embedhalluc {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates nearby seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Named sub-stream of a parent seed: derive_seed(root, "halluc") is stable
// across runs and independent of every other name.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : name) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return mix_seed(parent ^ mix_seed(h));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    return mix_seed(parent ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace embedhalluc
