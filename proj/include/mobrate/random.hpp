#pragma once

#include <cstdint>
#include <random>

namespace mobrate {

using Engine = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
    return mix64(mix64(mix64(master) ^ stream) + index);
}

inline Engine make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Engine(seq);
}

inline Engine make_engine(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return make_engine(derive_seed(master, stream, index));
}

inline double uniform01(Engine& eng) { return std::uniform_real_distribution<double>(0.0, 1.0)(eng); }

// Counter-based uniform in [0,1): a pure function of the key.
constexpr double hash_uniform(std::uint64_t key) {
    return static_cast<double>(mix64(key) >> 11) * 0x1.0p-53;
}

// Stream ids used across modules so that e.g. adding users never perturbs nodes.
namespace streams {
inline constexpr std::uint64_t nodes = 1;
inline constexpr std::uint64_t users = 2;
inline constexpr std::uint64_t lines = 3;
inline constexpr std::uint64_t fading = 4;
inline constexpr std::uint64_t misc = 5;
} // namespace streams

} // namespace mobrate
