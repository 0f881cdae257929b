#pragma once

// 64-bit FNV-1a. Used for intensity noise, tabular observation keys and ERB
// content ids, so the byte order fed into it must stay fixed.

#include <cstdint>
#include <span>
#include <string_view>

namespace adfll {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

class Fnv1a64 {
public:
    constexpr Fnv1a64& update(std::span<const std::uint8_t> bytes) {
        for (std::uint8_t b : bytes) {
            state_ ^= b;
            state_ *= kFnvPrime;
        }
        return *this;
    }

    constexpr Fnv1a64& update(std::string_view text) {
        for (char c : text) {
            state_ ^= static_cast<std::uint8_t>(c);
            state_ *= kFnvPrime;
        }
        return *this;
    }

    // Little-endian, `width` bytes.
    constexpr Fnv1a64& update_le(std::uint64_t value, int width) {
        for (int i = 0; i < width; ++i) {
            state_ ^= static_cast<std::uint8_t>(value >> (8 * i));
            state_ *= kFnvPrime;
        }
        return *this;
    }

    [[nodiscard]] constexpr std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = kFnvOffsetBasis;
};

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    return Fnv1a64{}.update(bytes).digest();
}

inline constexpr std::uint64_t fnv1a64(std::string_view text) {
    return Fnv1a64{}.update(text).digest();
}

} // namespace adfll
