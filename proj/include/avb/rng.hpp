#pragma once

#include <cstdint>

#include "avb/types.hpp"

namespace avb {

/// SplitMix64. Small, fast, and good enough for a deterministic testbed;
/// every source of randomness in the project goes through this so runs are
/// reproducible from a single seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform value in [0, bound) via rejection sampling; bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t threshold = -bound % bound;
        for (;;) {
            std::uint64_t v = next();
            if (v >= threshold) return v % bound;
        }
    }

    Bytes next_bytes(std::size_t n) {
        Bytes out;
        out.reserve(n);
        while (out.size() < n) {
            std::uint64_t v = next();
            for (int i = 0; i < 8 && out.size() < n; ++i) {
                out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
            }
        }
        return out;
    }

private:
    std::uint64_t state_;
};

}  // namespace avb
