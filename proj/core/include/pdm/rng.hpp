#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pdm {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for a named sub-stream of a root seed ("data", "env", "agent", "noise", ...).
constexpr std::uint64_t stream_seed(std::uint64_t root, std::string_view stream) noexcept {
    return mix_seed(root ^ mix_seed(hash_name(stream)));
}

inline Rng make_rng(std::uint64_t root, std::string_view stream) {
    return Rng{stream_seed(root, stream)};
}

}  // namespace pdm
