#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>

#include "avb/error.hpp"
#include "avb/types.hpp"

namespace avb {

/// FNV-1a, 64-bit. Deliberately non-cryptographic: the testbed studies
/// mechanism logic, not cryptography.
std::uint64_t fnv64(ByteView data);

/// Keyed digest over key || data || key. The key never leaves the trusted
/// store, so an attacker can rewrite bytes but cannot re-seal them.
std::uint64_t seal(std::uint64_t key, ByteView data);
bool verify_seal(std::uint64_t key, ByteView data, std::uint64_t value);

/// XOR with the byte stream of successive SplitMix64 outputs seeded by key
/// (8 little-endian bytes per output). Applying it twice restores the input.
Bytes keystream_transform(std::uint64_t key, ByteView data);

enum class ScanStatus : std::uint8_t {
    Unscanned = 0,
    AlreadyScanned = 1,
    Infected = 2,
    Suspicious = 3,
};

struct StateEntry {
    ScanStatus status = ScanStatus::Unscanned;
    std::uint64_t tick = 0;
    // Carried in memory so skipped files can report what was found earlier;
    // not part of the persisted format.
    std::optional<std::pair<std::uint32_t, std::uint32_t>> infected_by;
};

/// Per-file scan-status records. Mutation is token-gated; persistence is
/// sealed. Absent entries read as Unscanned.
class StateDb {
public:
    explicit StateDb(AuthToken guard) : guard_(guard) {}

    void set_state(FileId file, ScanStatus status, std::uint64_t tick, AuthToken token);
    void set_infected(FileId file, std::uint64_t tick, std::uint32_t family,
                      std::uint32_t algorithm, AuthToken token);
    StateEntry get_state(FileId file) const;
    const std::map<FileId, StateEntry>& entries() const { return entries_; }
    void adopt(FileId file, ScanStatus status, std::uint64_t tick, AuthToken token);

private:
    void require_token(AuthToken token) const;

    std::map<FileId, StateEntry> entries_;
    AuthToken guard_;
};

/// u32 LE entry count | per entry: u32 LE file id, u8 status, u64 LE tick |
/// u64 LE seal. Entries ascend by file id.
Bytes save_state(const StateDb& db, std::uint64_t key);
StateDb load_state(ByteView data, std::uint64_t key, AuthToken guard);

/// Best-effort parse without the seal check; the state-trusting baseline
/// scanner and the forgery attack both read the format this way.
std::optional<std::map<FileId, std::pair<ScanStatus, std::uint64_t>>> parse_state_unverified(
    ByteView data);

struct SignatureDb {
    std::uint32_t version = 1;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::array<std::uint8_t, 8>> patterns;

    friend bool operator==(const SignatureDb&, const SignatureDb&) = default;
};

/// u32 LE record count | u32 LE version | per record: u32 LE family,
/// u32 LE algorithm, 8 pattern bytes | u64 LE seal.
Bytes save_signature_db(const SignatureDb& db, std::uint64_t key);
SignatureDb load_signature_db(ByteView data, std::uint64_t key);
std::optional<SignatureDb> parse_signature_db_unverified(ByteView data);

struct IntegrityDb {
    std::map<FileId, std::uint64_t> expected;

    friend bool operator==(const IntegrityDb&, const IntegrityDb&) = default;
};

/// u32 LE record count | per record: u32 LE file id, u64 LE digest |
/// u64 LE seal.
Bytes save_integrity_db(const IntegrityDb& db, std::uint64_t key);
IntegrityDb load_integrity_db(ByteView data, std::uint64_t key);
std::optional<IntegrityDb> parse_integrity_db_unverified(ByteView data);

}  // namespace avb
