#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "avb/catalog.hpp"
#include "avb/disk.hpp"
#include "avb/fstore.hpp"
#include "avb/rng.hpp"
#include "avb/types.hpp"

// Scripted malware models. Everything here may touch the disk, the file
// store, and the boot pointer; nothing here takes or reaches a TrustedStore.

namespace avb {

/// Payload carries pattern(family, a) for every algorithm a the sample does
/// NOT evade, after a 16-byte random prefix. Evading an install's whole
/// subset makes the sample invisible to that install only.
struct VirusSample {
    std::uint32_t family = 0;
    std::set<std::uint32_t> evades;
    Bytes payload;
};

VirusSample make_virus_sample(const AlgorithmCatalog& catalog, std::uint32_t family,
                              std::set<std::uint32_t> evades, SplitMix64& rng);

/// Appends the sample payload to the file. Returns the pre-infection bytes
/// (the virus knows what it replaced; a rootkit serves them back later).
Bytes infect_file(FileStore& fs, FileId id, const VirusSample& sample);

/// What the malware learned about the AV's files at snapshot time; never
/// auto-refreshed, which is exactly what obfuscation epochs exploit.
struct AttackKnowledge {
    std::set<std::string> known_names;
    std::set<std::uint64_t> known_sizes;
    std::set<std::uint64_t> known_digests;
};

AttackKnowledge snapshot_knowledge(const FileStore& fs);

std::set<FileId> av_locate(const FileStore& fs, const AttackKnowledge& knowledge);

/// Rewrites the persisted state file marking the target AlreadyScanned.
/// Without the seal key the trailing seal goes stale. Returns false when the
/// bytes no longer parse as a state file (an obfuscated export).
bool attack_flip_state(FileStore& fs, FileId state_file_id, FileId target);

/// Flips one random byte of the file in place.
void attack_tamper_db(FileStore& fs, FileId db_file_id, SplitMix64& rng);

struct ReplacedReport {
    std::vector<FileId> replaced;
};

/// Overwrites every file the stale knowledge still locates with attacker
/// bytes. An empty report is a failed attack.
ReplacedReport attack_replace_av_executable(FileStore& fs, const AttackKnowledge& knowledge,
                                            SplitMix64& rng);

/// Creates a compressed archive of runs x (65535, run_value): a few hundred
/// bytes on disk, tens of megabytes decompressed.
FileId attack_plant_bomb(FileStore& fs, std::uint32_t runs, std::uint8_t run_value,
                         std::string name);

/// Copies the current MBR to a free sector, points the standard boot view
/// at the copy, then infects the real sector 0.
void attack_facade_mbr(VirtualDisk& disk, ByteView infected_mbr);

/// Hides an infection by serving the pre-infection bytes on standard reads.
void attack_install_rootkit(FileStore& fs, FileId infected_id, Bytes clean_bytes);

struct FuzzFile {
    std::string name;
    FileKind kind = FileKind::Data;
    Bytes content;
};

/// Deterministic corpus: 40% random raw bytes, 20% valid containers, 40%
/// malformed containers (bad magic, zero-count runs, length lies,
/// truncation).
std::vector<FuzzFile> fuzz_generate(SplitMix64& rng, std::uint32_t count);

}  // namespace avb
