#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace avb {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

using SectorIndex = std::uint32_t;
using FileId = std::uint32_t;
using Tick = std::uint64_t;

/// Capability secret issued by the trusted store at install time. Holding a
/// token equal to the store's is what separates the engine from the attacks.
struct AuthToken {
    std::uint64_t value = 0;
    friend bool operator==(const AuthToken&, const AuthToken&) = default;
};

inline void put_u16le(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32le(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64le(Bytes& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint16_t get_u16le(ByteView in, std::size_t off) {
    return static_cast<std::uint16_t>(in[off] | (in[off + 1] << 8));
}

inline std::uint32_t get_u32le(ByteView in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | in[off + static_cast<std::size_t>(i)];
    return v;
}

inline std::uint64_t get_u64le(ByteView in, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | in[off + static_cast<std::size_t>(i)];
    return v;
}

}  // namespace avb
