#pragma once

// PCG32 (XSH-RR, 64-bit state, 64-bit stream selector). Every random draw in
// the project goes through this generator so runs are reproducible from the
// logged seeds.

#include <cstdint>
#include <string_view>

#include "adfll/hash.hpp"

namespace adfll {

class Pcg32 {
public:
    Pcg32() : Pcg32(0x853c49e6748fea9bULL, 0xda3e39cb94b95bdbULL) {}

    Pcg32(std::uint64_t seed, std::uint64_t stream) {
        state_ = 0;
        inc_ = (stream << 1U) | 1U;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const auto xorshifted = static_cast<std::uint32_t>(((old >> 18U) ^ old) >> 27U);
        const auto rot = static_cast<std::uint32_t>(old >> 59U);
        return (xorshifted >> rot) | (xorshifted << ((~rot + 1U) & 31U));
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32U) | next_u32();
    }

    // Unbiased integer in [0, bound). bound must be > 0.
    std::uint32_t bounded(std::uint32_t bound) {
        const std::uint32_t threshold = (~bound + 1U) % bound;
        for (;;) {
            const std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    std::uint64_t bounded64(std::uint64_t bound) {
        if (bound <= 0xffffffffULL) return bounded(static_cast<std::uint32_t>(bound));
        const std::uint64_t threshold = (~bound + 1U) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11U) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    bool operator==(const Pcg32&) const = default;

private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

// Independent sub-stream keyed by a label, e.g. "agent:A1/round:2".
inline Pcg32 derive_rng(std::uint64_t seed, std::string_view label) {
    return Pcg32(seed, fnv1a64(label));
}

} // namespace adfll
