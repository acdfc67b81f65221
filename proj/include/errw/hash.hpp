#pragma once

#include <cstdint>
#include <string_view>

namespace errw {

/// SplitMix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of replica `index` under `master_seed`: mix64(mix64(master_seed) + index).
/// For a fixed master seed distinct indices always get distinct seeds.
constexpr std::uint64_t replica_seed(std::uint64_t master_seed, std::uint64_t index) noexcept
{
    return mix64(mix64(master_seed) + index);
}

/// 64-bit FNV-1a, used for content hashes that must be stable across platforms.
class Fnv1a {
public:
    void update(std::string_view bytes) noexcept
    {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
    }

    void update_u64(std::uint64_t v) noexcept
    {
        for (int i = 0; i < 8; ++i) {
            state_ ^= static_cast<unsigned char>(v >> (8 * i));
            state_ *= 0x100000001b3ULL;
        }
    }

    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace errw
