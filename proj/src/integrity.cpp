#include "avb/integrity.hpp"

#include "avb/rng.hpp"

namespace avb {

namespace {

Bytes u64le_bytes(std::uint64_t v) {
    Bytes out;
    put_u64le(out, v);
    return out;
}

void check_trailing_seal(ByteView data, std::uint64_t key, std::size_t body_len) {
    const std::uint64_t stored = get_u64le(data, body_len);
    if (!verify_seal(key, data.first(body_len), stored)) {
        throw Error(ErrorCode::TamperDetected, "seal mismatch");
    }
}

}  // namespace

std::uint64_t fnv64(ByteView data) {
    std::uint64_t state = 0xcbf29ce484222325ull;
    for (std::uint8_t b : data) {
        state ^= b;
        state *= 0x100000001b3ull;
    }
    return state;
}

std::uint64_t seal(std::uint64_t key, ByteView data) {
    Bytes buf = u64le_bytes(key);
    buf.insert(buf.end(), data.begin(), data.end());
    put_u64le(buf, key);
    return fnv64(buf);
}

bool verify_seal(std::uint64_t key, ByteView data, std::uint64_t value) {
    return seal(key, data) == value;
}

Bytes keystream_transform(std::uint64_t key, ByteView data) {
    SplitMix64 rng(key);
    Bytes out(data.begin(), data.end());
    std::size_t i = 0;
    while (i < out.size()) {
        std::uint64_t word = rng.next();
        for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
            out[i] ^= static_cast<std::uint8_t>(word >> (8 * b));
        }
    }
    return out;
}

void StateDb::require_token(AuthToken token) const {
    if (!(token == guard_)) throw Error(ErrorCode::Unauthorized, "state db token mismatch");
}

void StateDb::set_state(FileId file, ScanStatus status, std::uint64_t tick, AuthToken token) {
    require_token(token);
    StateEntry& e = entries_[file];
    e.status = status;
    e.tick = tick;
    if (status != ScanStatus::Infected) e.infected_by.reset();
}

void StateDb::set_infected(FileId file, std::uint64_t tick, std::uint32_t family,
                           std::uint32_t algorithm, AuthToken token) {
    require_token(token);
    StateEntry& e = entries_[file];
    e.status = ScanStatus::Infected;
    e.tick = tick;
    e.infected_by = {family, algorithm};
}

StateEntry StateDb::get_state(FileId file) const {
    auto it = entries_.find(file);
    return it == entries_.end() ? StateEntry{} : it->second;
}

void StateDb::adopt(FileId file, ScanStatus status, std::uint64_t tick, AuthToken token) {
    require_token(token);
    StateEntry& e = entries_[file];
    e.status = status;
    e.tick = tick;
    e.infected_by.reset();
}

Bytes save_state(const StateDb& db, std::uint64_t key) {
    Bytes out;
    put_u32le(out, static_cast<std::uint32_t>(db.entries().size()));
    for (const auto& [file, entry] : db.entries()) {
        put_u32le(out, file);
        out.push_back(static_cast<std::uint8_t>(entry.status));
        put_u64le(out, entry.tick);
    }
    put_u64le(out, seal(key, out));
    return out;
}

namespace {

constexpr std::size_t kStateEntrySize = 4 + 1 + 8;

bool state_structure_ok(ByteView data, std::uint32_t& count_out) {
    if (data.size() < 12) return false;
    const std::uint32_t count = get_u32le(data, 0);
    if (data.size() != 4 + static_cast<std::size_t>(count) * kStateEntrySize + 8) return false;
    count_out = count;
    return true;
}

}  // namespace

StateDb load_state(ByteView data, std::uint64_t key, AuthToken guard) {
    std::uint32_t count = 0;
    if (!state_structure_ok(data, count)) {
        throw Error(ErrorCode::FormatError, "state db truncated or misshapen");
    }
    check_trailing_seal(data, key, data.size() - 8);
    StateDb db(guard);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t off = 4 + static_cast<std::size_t>(i) * kStateEntrySize;
        const FileId file = get_u32le(data, off);
        const std::uint8_t status = data[off + 4];
        if (status > 3) throw Error(ErrorCode::FormatError, "bad status byte");
        const std::uint64_t tick = get_u64le(data, off + 5);
        db.set_state(file, static_cast<ScanStatus>(status), tick, guard);
    }
    return db;
}

std::optional<std::map<FileId, std::pair<ScanStatus, std::uint64_t>>> parse_state_unverified(
    ByteView data) {
    std::uint32_t count = 0;
    if (!state_structure_ok(data, count)) return std::nullopt;
    std::map<FileId, std::pair<ScanStatus, std::uint64_t>> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t off = 4 + static_cast<std::size_t>(i) * kStateEntrySize;
        const std::uint8_t status = data[off + 4];
        if (status > 3) return std::nullopt;
        out[get_u32le(data, off)] = {static_cast<ScanStatus>(status), get_u64le(data, off + 5)};
    }
    return out;
}

Bytes save_signature_db(const SignatureDb& db, std::uint64_t key) {
    Bytes out;
    put_u32le(out, static_cast<std::uint32_t>(db.patterns.size()));
    put_u32le(out, db.version);
    for (const auto& [fa, pattern] : db.patterns) {
        put_u32le(out, fa.first);
        put_u32le(out, fa.second);
        out.insert(out.end(), pattern.begin(), pattern.end());
    }
    put_u64le(out, seal(key, out));
    return out;
}

namespace {

constexpr std::size_t kSigRecordSize = 4 + 4 + 8;

bool sig_structure_ok(ByteView data, std::uint32_t& count_out) {
    if (data.size() < 16) return false;
    const std::uint32_t count = get_u32le(data, 0);
    if (data.size() != 8 + static_cast<std::size_t>(count) * kSigRecordSize + 8) return false;
    count_out = count;
    return true;
}

SignatureDb parse_sig_body(ByteView data, std::uint32_t count) {
    SignatureDb db;
    db.version = get_u32le(data, 4);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t off = 8 + static_cast<std::size_t>(i) * kSigRecordSize;
        std::array<std::uint8_t, 8> pattern{};
        for (int b = 0; b < 8; ++b) pattern[static_cast<std::size_t>(b)] = data[off + 8 + b];
        db.patterns[{get_u32le(data, off), get_u32le(data, off + 4)}] = pattern;
    }
    return db;
}

}  // namespace

SignatureDb load_signature_db(ByteView data, std::uint64_t key) {
    std::uint32_t count = 0;
    if (!sig_structure_ok(data, count)) {
        throw Error(ErrorCode::FormatError, "signature db truncated or misshapen");
    }
    check_trailing_seal(data, key, data.size() - 8);
    return parse_sig_body(data, count);
}

std::optional<SignatureDb> parse_signature_db_unverified(ByteView data) {
    std::uint32_t count = 0;
    if (!sig_structure_ok(data, count)) return std::nullopt;
    return parse_sig_body(data, count);
}

Bytes save_integrity_db(const IntegrityDb& db, std::uint64_t key) {
    Bytes out;
    put_u32le(out, static_cast<std::uint32_t>(db.expected.size()));
    for (const auto& [file, digest] : db.expected) {
        put_u32le(out, file);
        put_u64le(out, digest);
    }
    put_u64le(out, seal(key, out));
    return out;
}

namespace {

constexpr std::size_t kIntegrityRecordSize = 4 + 8;

bool integrity_structure_ok(ByteView data, std::uint32_t& count_out) {
    if (data.size() < 12) return false;
    const std::uint32_t count = get_u32le(data, 0);
    if (data.size() != 4 + static_cast<std::size_t>(count) * kIntegrityRecordSize + 8) return false;
    count_out = count;
    return true;
}

IntegrityDb parse_integrity_body(ByteView data, std::uint32_t count) {
    IntegrityDb db;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t off = 4 + static_cast<std::size_t>(i) * kIntegrityRecordSize;
        db.expected[get_u32le(data, off)] = get_u64le(data, off + 4);
    }
    return db;
}

}  // namespace

IntegrityDb load_integrity_db(ByteView data, std::uint64_t key) {
    std::uint32_t count = 0;
    if (!integrity_structure_ok(data, count)) {
        throw Error(ErrorCode::FormatError, "integrity db truncated or misshapen");
    }
    check_trailing_seal(data, key, data.size() - 8);
    return parse_integrity_body(data, count);
}

std::optional<IntegrityDb> parse_integrity_db_unverified(ByteView data) {
    std::uint32_t count = 0;
    if (!integrity_structure_ok(data, count)) return std::nullopt;
    return parse_integrity_body(data, count);
}

}  // namespace avb
