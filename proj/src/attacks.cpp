#include "avb/attacks.hpp"

#include <algorithm>

#include "avb/error.hpp"
#include "avb/integrity.hpp"

namespace avb {

VirusSample make_virus_sample(const AlgorithmCatalog& catalog, std::uint32_t family,
                              std::set<std::uint32_t> evades, SplitMix64& rng) {
    VirusSample sample;
    sample.family = family;
    sample.evades = std::move(evades);
    sample.payload = rng.next_bytes(16);
    for (std::uint32_t a = 0; a < catalog.algorithms; ++a) {
        if (sample.evades.contains(a)) continue;
        const auto pattern = AlgorithmCatalog::pattern(family, a);
        sample.payload.insert(sample.payload.end(), pattern.begin(), pattern.end());
    }
    return sample;
}

Bytes infect_file(FileStore& fs, FileId id, const VirusSample& sample) {
    Bytes original = fs.read_file(id, ReadView::Raw);
    Bytes infected = original;
    infected.insert(infected.end(), sample.payload.begin(), sample.payload.end());
    fs.overwrite_file(id, infected);
    return original;
}

AttackKnowledge snapshot_knowledge(const FileStore& fs) {
    AttackKnowledge knowledge;
    for (FileId id : fs.file_ids()) {
        const FileEntry& entry = fs.entry(id);
        if (entry.kind != FileKind::AvComponent) continue;
        knowledge.known_names.insert(entry.name);
        knowledge.known_sizes.insert(entry.length);
        knowledge.known_digests.insert(fnv64(fs.read_file(id, ReadView::Raw)));
    }
    return knowledge;
}

std::set<FileId> av_locate(const FileStore& fs, const AttackKnowledge& knowledge) {
    std::set<FileId> located;
    for (FileId id : fs.file_ids()) {
        const FileEntry& entry = fs.entry(id);
        if (knowledge.known_names.contains(entry.name) ||
            knowledge.known_sizes.contains(entry.length) ||
            knowledge.known_digests.contains(fnv64(fs.read_file(id, ReadView::Raw)))) {
            located.insert(id);
        }
    }
    return located;
}

bool attack_flip_state(FileStore& fs, FileId state_file_id, FileId target) {
    Bytes data = fs.read_file(state_file_id, ReadView::Raw);
    if (data.size() < 12) return false;
    const std::uint32_t count = get_u32le(data, 0);
    constexpr std::size_t entry_size = 4 + 1 + 8;
    if (data.size() != 4 + static_cast<std::size_t>(count) * entry_size + 8) return false;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t off = 4 + static_cast<std::size_t>(i) * entry_size;
        if (data[off + 4] > 3) return false;
    }
    bool found = false;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t off = 4 + static_cast<std::size_t>(i) * entry_size;
        if (get_u32le(data, off) == target) {
            data[off + 4] = 1;  // AlreadyScanned
            found = true;
        }
    }
    if (!found) {
        // Forge a fresh entry; the stale seal is left as-is either way.
        Bytes entry;
        put_u32le(entry, target);
        entry.push_back(1);
        put_u64le(entry, 0);
        std::size_t insert_at = 4;
        for (std::uint32_t i = 0; i < count && get_u32le(data, insert_at) < target; ++i) {
            insert_at += entry_size;
        }
        data.insert(data.begin() + static_cast<std::ptrdiff_t>(insert_at), entry.begin(),
                    entry.end());
        Bytes recount;
        put_u32le(recount, count + 1);
        std::copy(recount.begin(), recount.end(), data.begin());
    }
    fs.overwrite_file(state_file_id, data);
    return true;
}

void attack_tamper_db(FileStore& fs, FileId db_file_id, SplitMix64& rng) {
    Bytes data = fs.read_file(db_file_id, ReadView::Raw);
    if (data.empty()) return;
    const std::size_t index = rng.next_below(data.size());
    std::uint8_t flip = static_cast<std::uint8_t>(1 + rng.next_below(255));
    data[index] ^= flip;
    fs.overwrite_file(db_file_id, data);
}

ReplacedReport attack_replace_av_executable(FileStore& fs, const AttackKnowledge& knowledge,
                                            SplitMix64& rng) {
    ReplacedReport report;
    for (FileId id : av_locate(fs, knowledge)) {
        const std::uint64_t length = fs.entry(id).length;
        fs.overwrite_file(id, rng.next_bytes(length));
        report.replaced.push_back(id);
    }
    return report;
}

FileId attack_plant_bomb(FileStore& fs, std::uint32_t runs, std::uint8_t run_value,
                         std::string name) {
    if (runs < 1) throw Error(ErrorCode::BadLength, "bomb needs at least one run");
    Bytes container{'R', 'L', 'E', '1'};
    put_u32le(container, runs);
    for (std::uint32_t r = 0; r < runs; ++r) {
        put_u16le(container, kRleMaxRunLength);
        container.push_back(run_value);
    }
    return fs.create_file(std::move(name), FileKind::CompressedArchive, container);
}

void attack_facade_mbr(VirtualDisk& disk, ByteView infected_mbr) {
    const auto facade = disk.allocate_one();
    if (!facade) throw Error(ErrorCode::DiskFull, "no free sector for the facade");
    disk.write_sectors(*facade, disk.read_sectors_raw(0, 1));
    disk.set_boot_pointer(*facade);
    disk.write_sectors(0, infected_mbr);
}

void attack_install_rootkit(FileStore& fs, FileId infected_id, Bytes clean_bytes) {
    fs.install_interceptor(infected_id, std::move(clean_bytes));
}

namespace {

Bytes fuzz_container(SplitMix64& rng, bool malformed) {
    const std::uint32_t runs = 1 + static_cast<std::uint32_t>(rng.next_below(12));
    Bytes out{'R', 'L', 'E', '1'};
    put_u32le(out, runs);
    for (std::uint32_t r = 0; r < runs; ++r) {
        put_u16le(out, static_cast<std::uint16_t>(1 + rng.next_below(300)));
        out.push_back(static_cast<std::uint8_t>(rng.next_below(256)));
    }
    if (!malformed) return out;
    switch (rng.next_below(4)) {
        case 0:  // bad magic
            out[3] = 'X';
            break;
        case 1: {  // zero-count run
            const std::size_t off = 8 + 3 * rng.next_below(runs);
            out[off] = 0;
            out[off + 1] = 0;
            break;
        }
        case 2: {  // length lie
            Bytes recount;
            put_u32le(recount, runs + 1 + static_cast<std::uint32_t>(rng.next_below(5)));
            std::copy(recount.begin(), recount.end(), out.begin() + 4);
            break;
        }
        default:  // truncation
            out.resize(out.size() - 1 - rng.next_below(out.size() - 1));
            break;
    }
    return out;
}

}  // namespace

std::vector<FuzzFile> fuzz_generate(SplitMix64& rng, std::uint32_t count) {
    std::vector<FuzzFile> files;
    files.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        FuzzFile file;
        file.name = "fuzz_" + std::to_string(i);
        switch (i % 10) {
            case 0: case 1: case 2: case 3:
                file.kind = FileKind::Data;
                file.content = rng.next_bytes(rng.next_below(2048));
                break;
            case 4: case 5:
                file.kind = FileKind::CompressedArchive;
                file.content = fuzz_container(rng, false);
                break;
            default:
                file.kind = FileKind::CompressedArchive;
                file.content = fuzz_container(rng, true);
                break;
        }
        files.push_back(std::move(file));
    }
    return files;
}

}  // namespace avb
