#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "avb/fstore.hpp"
#include "avb/rng.hpp"
#include "avb/types.hpp"

namespace avb {

enum class ComponentRole { CoreExecutable, SignatureDb, IntegrityDb, StateDb };

const char* component_role_name(ComponentRole role);

struct ManifestEntry {
    ComponentRole role;
    FileId file = 0;
    std::string name;
    /// Digest of the bytes currently on disk (tracks obfuscation).
    std::uint64_t digest = 0;
    /// Digest of the component's install-time representation; constant
    /// across epochs, checked after de-obfuscation.
    std::uint64_t original_digest = 0;
    std::uint32_t epoch = 0;
};

/// Holds everything the attacker must never reach: keys, the auth token, the
/// golden MBR, and the component manifest. No attack operation takes one.
/// Models parameters kept on separate trusted hardware.
struct TrustedStore {
    std::uint64_t seal_key = 0;
    std::uint64_t definitions_key = 0;
    AuthToken token;
    Bytes golden_mbr;
    std::vector<ManifestEntry> manifest;
    std::uint32_t epoch = 0;
    std::uint64_t epoch_key = 0;

    ManifestEntry* find_role(ComponentRole role);
    const ManifestEntry* find_role(ComponentRole role) const;
};

/// Deterministic uniform choice of k of the N algorithm ids: Fisher-Yates
/// partial shuffle of 0..N-1, take the first k.
std::set<std::uint32_t> select_algorithms(std::uint64_t seed, std::uint32_t n, std::uint32_t k);

/// True iff every manifest file exists under its recorded name and, for all
/// roles but the state export, its raw on-disk bytes match the recorded
/// digest. The state export mutates with every scan and is covered by its
/// seal instead; enforcing its digest here would let a state forgery halt
/// the very scan that exposes it.
bool manifest_verify(const FileStore& fs, const TrustedStore& store);

/// One obfuscation round over every component file: fresh random 12-hex
/// name, re-encoded content under a fresh per-epoch keystream key, padded to
/// a random multiple of 4096 bytes with an 8-byte true-length footer.
/// Refuses to run on a compromised install.
void obfuscate_epoch(FileStore& fs, TrustedStore& store, SplitMix64& rng);

/// Inverse of the epoch encoding: strip the pad via the footer, undo the
/// keystream, verify digests. Epoch 0 is an identity read.
Bytes deobfuscate_component(const FileStore& fs, const TrustedStore& store, ComponentRole role);

/// Applies the current epoch's encoding to freshly produced component bytes
/// (used when the engine re-persists its state between epochs).
Bytes epoch_encode(const TrustedStore& store, ByteView plain, SplitMix64& rng);

inline constexpr std::uint64_t kPadBlock = 4096;
/// Upper bound on size growth from one epoch's padding.
inline constexpr std::uint64_t kMaxPadGrowth = 65536;
inline constexpr std::uint64_t kMaxExtraPadBlocks = 14;

/// TRIZ classification of each defense: S1 protected substance (the AV),
/// S2 harmful substance (the virus), S3/F2 what the defense introduces.
struct DefenseInfo {
    std::string_view defense;
    std::string_view introduces;
    std::string_view standard;
    std::vector<int> principles;
};

const std::vector<DefenseInfo>& defense_catalog();

}  // namespace avb
