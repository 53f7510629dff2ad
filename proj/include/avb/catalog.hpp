#pragma once

#include <array>
#include <cstdint>
#include <set>

#include "avb/error.hpp"
#include "avb/integrity.hpp"
#include "avb/rng.hpp"
#include "avb/types.hpp"

namespace avb {

/// Universe of detection algorithms. Each (family, algorithm) pair owns a
/// deterministic 8-byte signature pattern; an install activates only a
/// subset of the algorithms.
struct AlgorithmCatalog {
    std::uint32_t algorithms = 8;
    std::uint32_t families = 4;

    static std::array<std::uint8_t, 8> pattern(std::uint32_t family, std::uint32_t algorithm) {
        Bytes seed_input;
        put_u64le(seed_input, family);
        put_u64le(seed_input, algorithm);
        SplitMix64 rng(fnv64(seed_input));
        const std::uint64_t word = rng.next();
        std::array<std::uint8_t, 8> out{};
        for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(word >> (8 * i));
        return out;
    }

    /// All (family, algorithm) pairs must map to distinct patterns.
    void validate() const {
        std::set<std::array<std::uint8_t, 8>> seen;
        for (std::uint32_t f = 0; f < families; ++f) {
            for (std::uint32_t a = 0; a < algorithms; ++a) {
                if (!seen.insert(pattern(f, a)).second) {
                    throw Error(ErrorCode::Internal, "pattern collision in catalog");
                }
            }
        }
    }
};

}  // namespace avb
