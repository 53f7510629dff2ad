#include <doctest.h>

#include <cstdint>
#include <set>

#include "avb/rng.hpp"

using avb::Bytes;
using avb::SplitMix64;

TEST_CASE("splitmix64 matches the reference stream") {
    SplitMix64 a(0);
    CHECK(a.next() == 0xe220a8397b1dcdafull);
    CHECK(a.next() == 0x6e789e6aa1b965f4ull);
    CHECK(a.next() == 0x06c45d188009454full);

    SplitMix64 b(1234567);
    CHECK(b.next() == 0x599ed017fb08fc85ull);
    CHECK(b.next() == 0x2c73f08458540fa5ull);
    CHECK(b.next() == 0x883ebce5a3f27c77ull);

    SplitMix64 c(42);
    CHECK(c.next() == 0xbdd732262feb6e95ull);
    CHECK(c.next() == 0x28efe333b266f103ull);
    CHECK(c.next() == 0x47526757130f9f52ull);
}

TEST_CASE("same seed gives the same stream, different seeds differ") {
    SplitMix64 a(99), b(99), c(100);
    bool diverged = false;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t va = a.next();
        CHECK(va == b.next());
        if (va != c.next()) diverged = true;
    }
    CHECK(diverged);
}

TEST_CASE("next_below stays in range and covers the range") {
    SplitMix64 rng(7);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const std::uint64_t v = rng.next_below(10);
        CHECK(v < 10);
        seen.insert(v);
    }
    CHECK(seen.size() == 10);
    CHECK(SplitMix64(5).next_below(1) == 0);
}

TEST_CASE("next_bytes emits each output little-endian first") {
    SplitMix64 rng(42);
    const Bytes bytes = rng.next_bytes(16);
    // First word of seed 42 is 0xbdd732262feb6e95.
    const Bytes expected_head = {0x95, 0x6e, 0xeb, 0x2f, 0x26, 0x32, 0xd7, 0xbd};
    REQUIRE(bytes.size() == 16);
    for (int i = 0; i < 8; ++i) CHECK(bytes[static_cast<std::size_t>(i)] == expected_head[static_cast<std::size_t>(i)]);

    SplitMix64 other(42);
    const Bytes partial = other.next_bytes(5);
    REQUIRE(partial.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(partial[static_cast<std::size_t>(i)] == bytes[static_cast<std::size_t>(i)]);
}
