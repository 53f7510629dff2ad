#include <doctest.h>

#include <array>
#include <set>

#include "avb/catalog.hpp"

using avb::AlgorithmCatalog;

TEST_CASE("patterns are deterministic with frozen values") {
    const std::array<std::uint8_t, 8> p25 = {0xca, 0x53, 0x70, 0x6e, 0xa8, 0xf1, 0x71, 0x22};
    const std::array<std::uint8_t, 8> p00 = {0x25, 0xcd, 0x1d, 0x68, 0x1b, 0xfd, 0x93, 0x41};
    const std::array<std::uint8_t, 8> p13 = {0x47, 0x76, 0x9e, 0x1c, 0x28, 0x58, 0x01, 0x4d};
    CHECK(AlgorithmCatalog::pattern(2, 5) == p25);
    CHECK(AlgorithmCatalog::pattern(0, 0) == p00);
    CHECK(AlgorithmCatalog::pattern(1, 3) == p13);
    CHECK(AlgorithmCatalog::pattern(2, 5) == AlgorithmCatalog::pattern(2, 5));
}

TEST_CASE("all default catalog patterns are distinct") {
    const AlgorithmCatalog catalog;
    std::set<std::array<std::uint8_t, 8>> seen;
    for (std::uint32_t f = 0; f < catalog.families; ++f) {
        for (std::uint32_t a = 0; a < catalog.algorithms; ++a) {
            CHECK(seen.insert(AlgorithmCatalog::pattern(f, a)).second);
        }
    }
    CHECK(seen.size() == 32);
    CHECK_NOTHROW(catalog.validate());
}

TEST_CASE("argument order matters") {
    CHECK(AlgorithmCatalog::pattern(1, 2) != AlgorithmCatalog::pattern(2, 1));
}
