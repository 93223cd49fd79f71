#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace aitlm {

// 64-bit FNV-1a; used for model content ids and table fingerprints.
class fnv1a {
public:
    static constexpr std::uint64_t offset_basis = 0xcbf29ce484222325ull;
    static constexpr std::uint64_t prime = 0x100000001b3ull;

    fnv1a& update(std::span<const std::uint8_t> bytes) noexcept {
        for (auto b : bytes) {
            state_ ^= b;
            state_ *= prime;
        }
        return *this;
    }

    fnv1a& update(std::string_view text) noexcept {
        for (char c : text) {
            state_ ^= static_cast<std::uint8_t>(c);
            state_ *= prime;
        }
        return *this;
    }

    fnv1a& update_u64(std::uint64_t v) noexcept {
        for (int shift = 56; shift >= 0; shift -= 8) {
            state_ ^= static_cast<std::uint8_t>(v >> shift);
            state_ *= prime;
        }
        return *this;
    }

    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = offset_basis;
};

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace aitlm
