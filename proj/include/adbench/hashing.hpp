#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace adbench {

// Stable (platform independent) hashing used for fingerprints and seeds.

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) noexcept {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Seed for one experiment: a pure function of the global seed and the
/// experiment's identity string.
constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view identity) noexcept {
    return splitmix64(fnv1a(identity, splitmix64(global_seed)));
}

std::string to_hex(std::uint64_t v);

}  // namespace adbench
