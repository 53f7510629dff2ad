#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>

#include "avb/attacks.hpp"
#include "avb/engine.hpp"
#include "avb/error.hpp"
#include "avb/integrity.hpp"

using avb::AlgorithmCatalog;
using avb::AttackKnowledge;
using avb::Bytes;
using avb::FileId;
using avb::FileKind;
using avb::FileStore;
using avb::ReadView;
using avb::SplitMix64;
using avb::VirtualDisk;

namespace {

bool contains_pattern(const Bytes& haystack, const std::array<std::uint8_t, 8>& needle) {
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}

}  // namespace

TEST_CASE("virus payloads carry exactly the patterns they do not evade") {
    const AlgorithmCatalog catalog;
    SplitMix64 rng(20);
    const avb::VirusSample sample = avb::make_virus_sample(catalog, 2, {1, 4}, rng);
    CHECK(sample.family == 2);
    for (std::uint32_t a = 0; a < catalog.algorithms; ++a) {
        const bool evaded = sample.evades.contains(a);
        CHECK(contains_pattern(sample.payload, AlgorithmCatalog::pattern(2, a)) == !evaded);
    }
    // Other families' patterns never appear.
    for (std::uint32_t a = 0; a < catalog.algorithms; ++a) {
        CHECK_FALSE(contains_pattern(sample.payload, AlgorithmCatalog::pattern(0, a)));
    }
}

TEST_CASE("infection appends and reports the original bytes") {
    VirtualDisk disk(128, 64);
    FileStore fs(disk);
    SplitMix64 rng(21);
    const Bytes original = rng.next_bytes(100);
    const FileId id = fs.create_file("f", FileKind::Data, original);

    const avb::VirusSample sample = avb::make_virus_sample(AlgorithmCatalog{}, 1, {}, rng);
    const Bytes returned = avb::infect_file(fs, id, sample);
    CHECK(returned == original);

    const Bytes infected = fs.read_file(id, ReadView::Raw);
    REQUIRE(infected.size() == original.size() + sample.payload.size());
    CHECK(Bytes(infected.begin(), infected.begin() + 100) == original);
}

TEST_CASE("stale knowledge locates files by name, size, or digest") {
    VirtualDisk disk(256, 64);
    FileStore fs(disk);
    SplitMix64 rng(22);
    const FileId core = fs.create_file("core.bin", FileKind::AvComponent, rng.next_bytes(500));
    fs.create_file("user.dat", FileKind::Data, rng.next_bytes(123));

    const AttackKnowledge knowledge = avb::snapshot_knowledge(fs);
    CHECK(knowledge.known_names.contains("core.bin"));
    CHECK_FALSE(knowledge.known_names.contains("user.dat"));

    SUBCASE("exact name match") {
        CHECK(avb::av_locate(fs, knowledge).contains(core));
    }
    SUBCASE("rename alone does not hide: size and digest still match") {
        fs.rename_file(core, "x");
        CHECK(avb::av_locate(fs, knowledge).contains(core));
    }
    SUBCASE("rename plus new content does not hide: size still matches") {
        fs.rename_file(core, "x");
        fs.overwrite_file(core, rng.next_bytes(500));
        CHECK(avb::av_locate(fs, knowledge).contains(core));
    }
    SUBCASE("rename, re-sign, and resize together starve the locator") {
        fs.rename_file(core, "x");
        fs.overwrite_file(core, rng.next_bytes(731));  // new size and content
        CHECK(avb::av_locate(fs, knowledge).empty());
    }
}

TEST_CASE("state flip forges a skip mark but cannot re-seal") {
    VirtualDisk disk(256, 64);
    FileStore fs(disk);
    const avb::AuthToken token{9};
    avb::StateDb db(token);
    db.set_state(5, avb::ScanStatus::Unscanned, 2, token);
    const std::uint64_t key = 0xabc;
    const FileId state_file =
        fs.create_file("state", FileKind::AvComponent, avb::save_state(db, key));

    REQUIRE(avb::attack_flip_state(fs, state_file, 5));

    const Bytes forged = fs.read_file(state_file, ReadView::Raw);
    const auto parsed = avb::parse_state_unverified(forged);
    REQUIRE(parsed.has_value());
    CHECK(parsed->at(5).first == avb::ScanStatus::AlreadyScanned);
    CHECK_THROWS_AS(avb::load_state(forged, key, token), avb::Error);

    SUBCASE("a target without an entry gets one forged in") {
        REQUIRE(avb::attack_flip_state(fs, state_file, 7));
        const auto again = avb::parse_state_unverified(fs.read_file(state_file, ReadView::Raw));
        REQUIRE(again.has_value());
        CHECK(again->at(7).first == avb::ScanStatus::AlreadyScanned);
        CHECK(again->at(5).first == avb::ScanStatus::AlreadyScanned);
    }
    SUBCASE("an obfuscated export no longer parses, so the attack reports failure") {
        fs.overwrite_file(state_file, Bytes(4096, 0xee));
        CHECK_FALSE(avb::attack_flip_state(fs, state_file, 5));
    }
}

TEST_CASE("database tampering flips exactly one byte") {
    VirtualDisk disk(256, 64);
    FileStore fs(disk);
    SplitMix64 rng(5);
    const Bytes original = rng.next_bytes(200);
    const FileId id = fs.create_file("db", FileKind::AvComponent, original);

    avb::attack_tamper_db(fs, id, rng);
    const Bytes tampered = fs.read_file(id, ReadView::Raw);
    REQUIRE(tampered.size() == original.size());
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        if (original[i] != tampered[i]) ++diffs;
    }
    CHECK(diffs == 1);
}

TEST_CASE("replacement rewrites every located file") {
    VirtualDisk disk(256, 64);
    FileStore fs(disk);
    SplitMix64 rng(6);
    const Bytes body = rng.next_bytes(300);
    const FileId a = fs.create_file("av1", FileKind::AvComponent, body);
    const FileId b = fs.create_file("av2", FileKind::AvComponent, rng.next_bytes(40));
    const AttackKnowledge knowledge = avb::snapshot_knowledge(fs);

    const auto report = avb::attack_replace_av_executable(fs, knowledge, rng);
    CHECK(report.replaced.size() == 2);
    CHECK(fs.read_file(a, ReadView::Raw) != body);
    CHECK(fs.entry(a).length == 300);  // same size, different bytes
    CHECK(fs.entry(b).length == 40);

    const auto empty = avb::attack_replace_av_executable(fs, AttackKnowledge{}, rng);
    CHECK(empty.replaced.empty());
}

TEST_CASE("the planted bomb is small on disk and huge when expanded") {
    VirtualDisk disk(256, 64);
    FileStore fs(disk);
    const FileId bomb = avb::attack_plant_bomb(fs, 160, 0, "bomb.rle");
    CHECK(fs.entry(bomb).length == 488);
    CHECK(fs.entry(bomb).kind == FileKind::CompressedArchive);

    avb::Meter meter = avb::Meter::unlimited();
    const auto result = avb::rle_decompress_stream(fs.read_file(bomb, ReadView::Raw), meter);
    CHECK(result.status == avb::RleStatus::Ok);
    CHECK(result.output.size() == 10485600);  // 21487x expansion
}

TEST_CASE("the facade leaves the standard view clean while sector zero is infected") {
    VirtualDisk disk(64, 64);
    SplitMix64 rng(7);
    const Bytes clean_mbr = rng.next_bytes(64);
    disk.write_sectors(0, clean_mbr);
    const Bytes infected_mbr = rng.next_bytes(64);

    avb::attack_facade_mbr(disk, infected_mbr);
    CHECK(disk.read_mbr_standard() == clean_mbr);
    CHECK(disk.read_sectors_raw(0, 1) == infected_mbr);
    CHECK(disk.boot_pointer() != 0);
}

TEST_CASE("rootkit interception serves old bytes on the standard view only") {
    VirtualDisk disk(128, 64);
    FileStore fs(disk);
    SplitMix64 rng(8);
    const Bytes clean_bytes = rng.next_bytes(90);
    const FileId id = fs.create_file("f", FileKind::Data, clean_bytes);
    const avb::VirusSample sample = avb::make_virus_sample(AlgorithmCatalog{}, 0, {}, rng);
    const Bytes original = avb::infect_file(fs, id, sample);
    avb::attack_install_rootkit(fs, id, original);

    CHECK(fs.read_file(id, ReadView::Standard) == clean_bytes);
    CHECK(fs.read_file(id, ReadView::Raw) != clean_bytes);
}

TEST_CASE("the fuzz corpus is deterministic with the documented mix") {
    SplitMix64 rng_a(9);
    SplitMix64 rng_b(9);
    const auto corpus_a = avb::fuzz_generate(rng_a, 200);
    const auto corpus_b = avb::fuzz_generate(rng_b, 200);
    REQUIRE(corpus_a.size() == 200);
    for (std::size_t i = 0; i < corpus_a.size(); ++i) {
        CHECK(corpus_a[i].name == corpus_b[i].name);
        CHECK(corpus_a[i].content == corpus_b[i].content);
    }

    std::size_t data = 0, archives = 0;
    for (const auto& file : corpus_a) {
        if (file.kind == FileKind::Data) ++data;
        if (file.kind == FileKind::CompressedArchive) ++archives;
    }
    CHECK(data == 80);       // 40% raw bytes
    CHECK(archives == 120);  // 20% valid + 40% malformed containers
}

TEST_CASE("no attack interface accepts trusted-store material") {
    // The attack surface works from FileStore/VirtualDisk handles alone;
    // keys, tokens, and the manifest stay out of reach by construction.
    static_assert(std::is_invocable_v<decltype(avb::snapshot_knowledge), const FileStore&>);
    static_assert(std::is_invocable_v<decltype(avb::attack_flip_state), FileStore&, FileId, FileId>);
    static_assert(
        std::is_invocable_v<decltype(avb::attack_facade_mbr), VirtualDisk&, avb::ByteView>);
    CHECK(true);
}
