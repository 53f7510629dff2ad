#include <doctest.h>

#include <string>

#include "avb/error.hpp"
#include "avb/integrity.hpp"
#include "avb/rng.hpp"

using avb::AuthToken;
using avb::Bytes;
using avb::Error;
using avb::ScanStatus;
using avb::StateDb;

namespace {

Bytes from_string(const std::string& s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST_CASE("fnv64 matches the published vectors") {
    CHECK(avb::fnv64({}) == 0xcbf29ce484222325ull);
    CHECK(avb::fnv64(from_string("a")) == 0xaf63dc4c8601ec8cull);
    CHECK(avb::fnv64(from_string("foobar")) == 0x85944171f73967e8ull);
}

TEST_CASE("fnv64 is order sensitive") {
    CHECK(avb::fnv64(from_string("ab")) == 0x089c4407b545986aull);
    CHECK(avb::fnv64(from_string("ba")) == 0x08a63307b54dd00cull);
    CHECK(avb::fnv64(from_string("ab")) != avb::fnv64(from_string("ba")));
}

TEST_CASE("seal depends on key and content") {
    const Bytes data = from_string("hello");
    CHECK(avb::seal(42, data) == 0xa814a6c9596699dfull);
    CHECK(avb::seal(0, {}) == 0x88201fb960ff6465ull);

    const std::uint64_t s = avb::seal(42, data);
    CHECK(avb::verify_seal(42, data, s));
    CHECK_FALSE(avb::verify_seal(43, data, s));

    Bytes altered = data;
    altered[0] ^= 1;
    CHECK_FALSE(avb::verify_seal(42, altered, s));
}

TEST_CASE("keystream transform is an involution with a frozen stream") {
    const Bytes plain = from_string("attack at dawn");
    const Bytes enc = avb::keystream_transform(42, plain);
    CHECK(enc != plain);
    CHECK(avb::keystream_transform(42, enc) == plain);
    CHECK(avb::keystream_transform(41, enc) != plain);

    // First keystream bytes for key 42 are the little-endian SplitMix64
    // words, so zeros encrypt to the stream itself.
    const Bytes zeros(8, 0);
    const Bytes stream = avb::keystream_transform(42, zeros);
    CHECK(stream == Bytes{0x95, 0x6e, 0xeb, 0x2f, 0x26, 0x32, 0xd7, 0xbd});
}

TEST_CASE("state mutations require the token") {
    const AuthToken token{555};
    StateDb db(token);
    db.set_state(1, ScanStatus::AlreadyScanned, 10, token);
    CHECK(db.get_state(1).status == ScanStatus::AlreadyScanned);
    CHECK(db.get_state(1).tick == 10);
    CHECK(db.get_state(2).status == ScanStatus::Unscanned);  // absent reads as unscanned

    CHECK_THROWS_AS(db.set_state(1, ScanStatus::Infected, 11, AuthToken{556}), Error);
    CHECK(db.get_state(1).status == ScanStatus::AlreadyScanned);

    db.set_infected(3, 12, 2, 5, token);
    const auto entry = db.get_state(3);
    CHECK(entry.status == ScanStatus::Infected);
    REQUIRE(entry.infected_by.has_value());
    CHECK(entry.infected_by->first == 2);
    CHECK(entry.infected_by->second == 5);
}

TEST_CASE("state database save/load round-trips and is tamper-evident") {
    const AuthToken token{77};
    StateDb db(token);
    db.set_state(4, ScanStatus::AlreadyScanned, 3, token);
    db.set_state(9, ScanStatus::Suspicious, 5, token);

    const Bytes blob = avb::save_state(db, 0xfeed);
    const StateDb loaded = avb::load_state(blob, 0xfeed, token);
    CHECK(loaded.get_state(4).status == ScanStatus::AlreadyScanned);
    CHECK(loaded.get_state(9).status == ScanStatus::Suspicious);
    CHECK(loaded.get_state(9).tick == 5);

    SUBCASE("wrong key") {
        CHECK_THROWS_AS(avb::load_state(blob, 0xbeef, token), Error);
    }
    SUBCASE("flipped status byte") {
        Bytes bad = blob;
        bad[8] ^= 1;
        CHECK_THROWS_AS(avb::load_state(bad, 0xfeed, token), Error);
    }
    SUBCASE("truncation") {
        Bytes bad(blob.begin(), blob.end() - 1);
        CHECK_THROWS_AS(avb::load_state(bad, 0xfeed, token), Error);
    }
    SUBCASE("unverified parse reads the same entries") {
        const auto parsed = avb::parse_state_unverified(blob);
        REQUIRE(parsed.has_value());
        CHECK(parsed->size() == 2);
        CHECK(parsed->at(4).first == ScanStatus::AlreadyScanned);
        // And still parses after a status flip; only the seal notices.
        Bytes forged = blob;
        forged[8] = 1;
        CHECK(avb::parse_state_unverified(forged).has_value());
    }
}

TEST_CASE("signature database round-trips under its seal") {
    avb::SignatureDb db;
    db.version = 3;
    db.patterns[{0, 1}] = {1, 2, 3, 4, 5, 6, 7, 8};
    db.patterns[{2, 7}] = {9, 9, 9, 9, 9, 9, 9, 9};

    const Bytes blob = avb::save_signature_db(db, 123);
    CHECK(avb::load_signature_db(blob, 123) == db);
    CHECK_THROWS_AS(avb::load_signature_db(blob, 124), Error);

    Bytes bad = blob;
    bad[bad.size() / 2] ^= 0x40;
    CHECK_THROWS_AS(avb::load_signature_db(bad, 123), Error);
    CHECK(avb::parse_signature_db_unverified(blob).has_value());
    CHECK_FALSE(avb::parse_signature_db_unverified(Bytes{1, 2}).has_value());
}

TEST_CASE("integrity database round-trips under its seal") {
    avb::IntegrityDb db;
    db.expected[1] = 0x1111;
    db.expected[9] = 0x9999;

    const Bytes blob = avb::save_integrity_db(db, 55);
    CHECK(avb::load_integrity_db(blob, 55) == db);
    CHECK_THROWS_AS(avb::load_integrity_db(blob, 56), Error);

    Bytes bad = blob;
    bad.back() ^= 1;  // the seal itself
    CHECK_THROWS_AS(avb::load_integrity_db(bad, 55), Error);
    const auto parsed = avb::parse_integrity_db_unverified(blob);
    REQUIRE(parsed.has_value());
    CHECK(parsed->expected.at(9) == 0x9999);
}

TEST_CASE("empty databases serialize and load") {
    const AuthToken token{1};
    const Bytes state_blob = avb::save_state(StateDb(token), 9);
    CHECK(state_blob.size() == 12);  // count + seal only
    CHECK(avb::load_state(state_blob, 9, token).entries().empty());

    const Bytes sig_blob = avb::save_signature_db(avb::SignatureDb{}, 9);
    CHECK(avb::load_signature_db(sig_blob, 9).patterns.empty());
}
