#include <doctest.h>

#include <algorithm>
#include <optional>
#include <string>
#include <utility>

#include "avb/attacks.hpp"
#include "avb/engine.hpp"
#include "avb/error.hpp"

using avb::AlgorithmCatalog;
using avb::BudgetPolicy;
using avb::Bytes;
using avb::EngineInstance;
using avb::EngineStatus;
using avb::Error;
using avb::FileId;
using avb::FileKind;
using avb::FileStore;
using avb::MbrStatus;
using avb::Meter;
using avb::ReadView;
using avb::ScanFlags;
using avb::ScanReport;
using avb::SplitMix64;
using avb::TrustedStore;
using avb::Verdict;
using avb::VirtualDisk;

namespace {

struct World {
    AlgorithmCatalog catalog;
    BudgetPolicy policy;
    VirtualDisk disk{2048, 512};
    FileStore fs{disk};
    TrustedStore store;
    std::optional<EngineInstance> engine;
    SplitMix64 rng{999};

    explicit World(std::uint64_t install_seed = 1, std::uint32_t k = 3) {
        engine.emplace(EngineInstance::install(catalog, install_seed, k, policy, store, fs));
    }

    FileId add_file(const std::string& name, std::size_t size,
                    FileKind kind = FileKind::Data) {
        return fs.create_file(name, kind, rng.next_bytes(size));
    }

    const avb::FileScanRecord& record_for(const ScanReport& report, FileId id) {
        for (const auto& record : report.files) {
            if (record.id == id) return record;
        }
        REQUIRE(false);
        static avb::FileScanRecord dummy;
        return dummy;
    }
};

}  // namespace

TEST_CASE("install writes four components and passes its own self check") {
    World w;
    CHECK(w.engine->installed().size() == 3);
    CHECK(w.engine->self_check());
    CHECK(w.store.manifest.size() == 4);
    CHECK(w.fs.find(avb::kInitialCoreName).has_value());
    CHECK(w.fs.find(avb::kInitialSigDbName).has_value());
    CHECK(w.fs.find(avb::kInitialIntegrityDbName).has_value());
    CHECK(w.fs.find(avb::kInitialStateDbName).has_value());
    CHECK(w.engine->check_mbr() == MbrStatus::Consistent);

    // Same seed, same subset; install is deterministic.
    World v(1, 3);
    CHECK(v.engine->installed() == w.engine->installed());
    CHECK_THROWS_AS(EngineInstance::install(w.catalog, 1, 0, w.policy, w.store, w.fs), Error);
}

TEST_CASE("scan_file flags planted patterns and clears honest files") {
    World w;
    const FileId target = w.add_file("t.bin", 600);

    avb::VirusSample sample = avb::make_virus_sample(w.catalog, 2, {}, w.rng);
    avb::infect_file(w.fs, target, sample);

    Meter meter(w.policy, w.fs.entry(target).length);
    const Verdict verdict = w.engine->scan_file(target, ReadView::Raw, meter);
    CHECK(verdict.kind == Verdict::Kind::Infected);
    CHECK(verdict.family == 2);
    CHECK(verdict.algorithm == *w.engine->installed().begin());

    const FileId clean = w.add_file("c.bin", 600);
    Meter meter2(w.policy, 600);
    CHECK(w.engine->scan_file(clean, ReadView::Raw, meter2) == Verdict::clean());
    Meter meter3 = Meter::unlimited();
    CHECK_THROWS_AS(w.engine->scan_file(9999, ReadView::Raw, meter3), Error);
}

TEST_CASE("a sample evading the installed subset is locally invisible") {
    World w;
    const FileId target = w.add_file("t.bin", 600);
    avb::VirusSample sample = avb::make_virus_sample(w.catalog, 1, w.engine->installed(), w.rng);
    avb::infect_file(w.fs, target, sample);

    Meter meter = Meter::unlimited();
    CHECK(w.engine->scan_file(target, ReadView::Raw, meter) == Verdict::clean());

    // But an install holding any other algorithm sees it.
    std::uint64_t other_seed = 2;
    while (avb::select_algorithms(other_seed, w.catalog.algorithms, 3) == w.engine->installed()) {
        ++other_seed;
    }
    VirtualDisk disk2(2048, 512);
    FileStore fs2(disk2);
    TrustedStore store2;
    EngineInstance other =
        EngineInstance::install(w.catalog, other_seed, 3, w.policy, store2, fs2);
    const auto opinion = other.second_opinion_scan(w.fs, w.store.manifest);
    bool found = false;
    for (const auto& record : opinion.files) {
        if (record.id == target) {
            CHECK(record.verdict.kind == Verdict::Kind::Infected);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("full scan is clean on a fresh world and incremental rescans nothing") {
    World w;
    w.add_file("a.bin", 700);
    w.add_file("b.bin", 1500);

    const ScanReport full = w.engine->full_scan(1);
    CHECK(full.engine_status == EngineStatus::Ok);
    CHECK(full.files_scanned == 6);  // two user files + four components
    for (const auto& record : full.files) CHECK(record.verdict == Verdict::clean());

    const ScanReport inc = w.engine->incremental_scan(2);
    CHECK(inc.files_scanned == 0);
    CHECK(inc.bytes_consumed == 0);
    for (const auto& record : inc.files) CHECK_FALSE(record.fresh);
}

TEST_CASE("incremental scans exactly what changed since the last scan") {
    World w;
    const FileId a = w.add_file("a.bin", 700);
    const FileId b = w.add_file("b.bin", 1500);
    w.engine->full_scan(1);

    w.fs.overwrite_file(a, w.rng.next_bytes(700));
    const ScanReport inc = w.engine->incremental_scan(2);
    CHECK(inc.files_scanned == 1);
    CHECK(w.record_for(inc, a).fresh);
    CHECK_FALSE(w.record_for(inc, b).fresh);
    CHECK(inc.bytes_consumed == 700);

    // An infection arriving through a write is caught the same way.
    avb::VirusSample sample = avb::make_virus_sample(w.catalog, 3, {}, w.rng);
    avb::infect_file(w.fs, b, sample);
    const ScanReport inc2 = w.engine->incremental_scan(3);
    CHECK(w.record_for(inc2, b).verdict.kind == Verdict::Kind::Infected);
    CHECK_FALSE(w.record_for(inc2, a).fresh);

    // Cached verdicts carry forward without a fresh read.
    const ScanReport inc3 = w.engine->incremental_scan(4);
    CHECK(w.record_for(inc3, b).verdict.kind == Verdict::Kind::Infected);
    CHECK_FALSE(w.record_for(inc3, b).fresh);
}

TEST_CASE("a forged state file cannot stop the rescan and trips the tamper wire") {
    World w;
    const FileId target = w.add_file("t.bin", 800);
    w.engine->full_scan(1);

    avb::VirusSample sample = avb::make_virus_sample(w.catalog, 0, {}, w.rng);
    avb::infect_file(w.fs, target, sample);

    const FileId state_file = *w.fs.find(avb::kInitialStateDbName);
    REQUIRE(avb::attack_flip_state(w.fs, state_file, target));

    SUBCASE("hardened: archive bits override the forged skip mark") {
        const ScanReport inc = w.engine->incremental_scan(3);
        CHECK(inc.state_db_tampered);
        CHECK(w.record_for(inc, target).verdict.kind == Verdict::Kind::Infected);
        CHECK(w.record_for(inc, target).fresh);
    }
    SUBCASE("baseline: trusting the state file skips the infected file") {
        ScanFlags flags;
        flags.trust_state_db = true;
        const ScanReport inc = w.engine->incremental_scan(3, flags);
        CHECK_FALSE(w.record_for(inc, target).fresh);
        CHECK(w.record_for(inc, target).verdict == Verdict::clean());
    }
}

TEST_CASE("archive bits catch writes that keep size and timestamps stable") {
    World w;
    const FileId a = w.add_file("a.bin", 512);
    w.engine->full_scan(1);

    // Same-size overwrite: no metadata changes, only the bits notice.
    Bytes body = w.fs.read_file(a, ReadView::Raw);
    body[100] ^= 1;
    w.fs.overwrite_file(a, body);
    const ScanReport inc = w.engine->incremental_scan(2);
    CHECK(w.record_for(inc, a).fresh);
}

TEST_CASE("decompression bombs break, honest archives do not") {
    World w;
    const FileId bomb = avb::attack_plant_bomb(w.fs, 160, 0, "bomb.rle");
    const ScanReport report = w.engine->full_scan(1);
    const auto& record = w.record_for(report, bomb);
    CHECK(record.verdict == Verdict::suspicious(Verdict::Reason::Break));
    const std::uint64_t threshold = avb::threshold_bytes(w.policy, w.fs.entry(bomb).length);
    CHECK(record.bytes <= threshold + avb::kRleMaxRunLength);

    // Suspicious files stay on the rescan list: the bits are left dirty.
    const ScanReport inc = w.engine->incremental_scan(2);
    CHECK(w.record_for(inc, bomb).fresh);

    World v;
    const Bytes honest = avb::rle_compress(v.rng.next_bytes(30000));
    const FileId archive = v.fs.create_file("ok.rle", FileKind::CompressedArchive, honest);
    const ScanReport report2 = v.engine->full_scan(1);
    CHECK(v.record_for(report2, archive).verdict == Verdict::clean());

    ScanFlags no_budget;
    no_budget.no_budget = true;
    const ScanReport unmetered = w.engine->full_scan(3, no_budget);
    CHECK(w.record_for(unmetered, bomb).verdict == Verdict::clean());
    CHECK(w.record_for(unmetered, bomb).bytes > 10000000);
}

TEST_CASE("malformed archives are suspicious unless leniency is forced") {
    World w;
    Bytes container = avb::rle_compress(w.rng.next_bytes(100));
    container[0] = 'X';
    const FileId trap = w.fs.create_file("trap.rle", FileKind::CompressedArchive, container);

    const ScanReport report = w.engine->full_scan(1);
    CHECK(w.record_for(report, trap).verdict ==
          Verdict::suspicious(Verdict::Reason::FormatError));

    ScanFlags lenient;
    lenient.lenient_format = true;
    const ScanReport report2 = w.engine->full_scan(2, lenient);
    CHECK(w.record_for(report2, trap).verdict == Verdict::clean());
}

TEST_CASE("rootkit cross-view detection forces the raw view") {
    World w;
    const FileId target = w.add_file("t.bin", 900);
    w.engine->full_scan(1);

    avb::VirusSample sample = avb::make_virus_sample(w.catalog, 1, {}, w.rng);
    const Bytes clean_bytes = avb::infect_file(w.fs, target, sample);
    avb::attack_install_rootkit(w.fs, target, clean_bytes);

    CHECK(w.engine->detect_rootkit(target));

    const ScanReport report = w.engine->full_scan(2);
    CHECK(report.rootkits == std::vector<FileId>{target});
    CHECK(report.used_raw_view);
    CHECK(w.record_for(report, target).verdict.kind == Verdict::Kind::Infected);

    ScanFlags blind;
    blind.no_rootkit_sweep = true;
    const ScanReport hidden = w.engine->full_scan(3, blind);
    CHECK(hidden.rootkits.empty());
    CHECK(w.record_for(hidden, target).verdict == Verdict::clean());
}

TEST_CASE("facade and direct MBR modifications are told apart and repaired") {
    World w;
    SUBCASE("facade: raw and standard views disagree") {
        avb::attack_facade_mbr(w.disk, w.rng.next_bytes(512));
        CHECK(w.engine->check_mbr() == MbrStatus::FacadeDetected);
        const ScanReport report = w.engine->full_scan(1);
        CHECK(report.mbr_status == MbrStatus::FacadeDetected);

        ScanFlags blind;
        blind.no_trusted_mbr = true;
        CHECK(w.engine->full_scan(2, blind).mbr_status == MbrStatus::Consistent);

        w.engine->repair_mbr();
        CHECK(w.engine->check_mbr() == MbrStatus::Consistent);
        CHECK(w.disk.boot_pointer() == 0);
        CHECK(w.disk.read_sectors_raw(0, 1) == w.store.golden_mbr);
    }
    SUBCASE("direct overwrite: both views agree but differ from the golden copy") {
        w.disk.write_sectors(0, w.rng.next_bytes(512));
        CHECK(w.engine->check_mbr() == MbrStatus::ModifiedDetected);
        w.engine->repair_mbr();
        CHECK(w.engine->check_mbr() == MbrStatus::Consistent);
    }
    SUBCASE("repair requires the bound token") {
        avb::attack_facade_mbr(w.disk, w.rng.next_bytes(512));
        CHECK_THROWS_AS(avb::repair_mbr(w.disk, w.store, avb::AuthToken{0xbad}), Error);
        CHECK(w.engine->check_mbr() == MbrStatus::FacadeDetected);  // unchanged
    }
}

TEST_CASE("a replaced component makes the engine refuse or, if told, lie") {
    World w;
    w.add_file("a.bin", 400);
    const FileId core = *w.fs.find(avb::kInitialCoreName);
    w.fs.overwrite_file(core, w.rng.next_bytes(8209));
    CHECK_FALSE(w.engine->self_check());

    const ScanReport strict = w.engine->full_scan(1);
    CHECK(strict.engine_status == EngineStatus::Compromised);
    CHECK(strict.files_scanned == 0);

    ScanFlags screwed;
    screwed.skip_self_check = true;
    const ScanReport forged = w.engine->full_scan(2, screwed);
    CHECK(forged.forged_clean);
    CHECK(forged.engine_status == EngineStatus::Ok);
    for (const auto& record : forged.files) {
        CHECK(record.verdict == Verdict::clean());
        CHECK_FALSE(record.fresh);
    }

    Meter meter = Meter::unlimited();
    CHECK_THROWS_AS(w.engine->scan_file(core, ReadView::Raw, meter), Error);
}

TEST_CASE("an epoch leaves scanning behavior unchanged") {
    World w;
    const FileId a = w.add_file("a.bin", 700);
    w.engine->full_scan(1);
    w.engine->run_epoch(w.rng);

    CHECK(w.engine->self_check());
    CHECK_FALSE(w.fs.find(avb::kInitialCoreName).has_value());  // renamed away

    const ScanReport inc = w.engine->incremental_scan(2);
    CHECK(inc.files_scanned == 0);  // the epoch's own writes are authorized

    avb::VirusSample sample = avb::make_virus_sample(w.catalog, 2, {}, w.rng);
    avb::infect_file(w.fs, a, sample);
    const ScanReport inc2 = w.engine->incremental_scan(3);
    CHECK(w.record_for(inc2, a).verdict.kind == Verdict::Kind::Infected);
}

TEST_CASE("second opinions verify the target manifest and stay read-only") {
    World w;
    const FileId a = w.add_file("a.bin", 600);
    w.engine->full_scan(1);

    VirtualDisk disk2(2048, 512);
    FileStore fs2(disk2);
    TrustedStore store2;
    EngineInstance other = EngineInstance::install(w.catalog, 77, 3, w.policy, store2, fs2);

    const auto clean_opinion = other.second_opinion_scan(w.fs, w.store.manifest);
    for (const auto& component : clean_opinion.components) {
        CHECK(component.present);
        CHECK_FALSE(component.modified);
    }

    const FileId core = *w.fs.find(avb::kInitialCoreName);
    const Bytes saved = w.fs.read_file(core, ReadView::Raw);
    w.fs.overwrite_file(core, w.rng.next_bytes(100));
    const auto opinion = other.second_opinion_scan(w.fs, w.store.manifest);
    bool core_flagged = false;
    for (const auto& component : opinion.components) {
        if (component.role == avb::ComponentRole::CoreExecutable) {
            core_flagged = component.modified;
        }
    }
    CHECK(core_flagged);

    // The sweep never wrote into the target world.
    w.fs.overwrite_file(core, saved);
    CHECK(w.fs.read_file(a, ReadView::Raw).size() == 600);
    CHECK(w.engine->self_check());
}

TEST_CASE("engines can be moved and cloned without losing their write hook") {
    World w;
    const FileId a = w.add_file("a.bin", 300);
    w.engine->full_scan(1);

    // Move into a fresh slot; the hook must follow.
    EngineInstance moved = std::move(*w.engine);
    w.fs.overwrite_file(a, w.rng.next_bytes(300));
    const ScanReport inc = moved.incremental_scan(2);
    CHECK(inc.files_scanned == 1);

    // Clone the whole world and verify divergence isolation.
    VirtualDisk disk2 = w.disk;
    FileStore fs2(w.fs, disk2);
    TrustedStore store2 = w.store;
    EngineInstance clone(moved, fs2, store2);
    avb::VirusSample sample = avb::make_virus_sample(w.catalog, 1, {}, w.rng);
    avb::infect_file(fs2, a, sample);

    const ScanReport clone_inc = clone.incremental_scan(3);
    bool clone_found = false;
    for (const auto& record : clone_inc.files) {
        if (record.id == a && record.verdict.kind == Verdict::Kind::Infected) clone_found = true;
    }
    CHECK(clone_found);

    const ScanReport original_inc = moved.incremental_scan(3);
    for (const auto& record : original_inc.files) {
        if (record.id == a) CHECK(record.verdict == Verdict::clean());
    }
}
