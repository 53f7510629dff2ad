#include "avb/selfprotect.hpp"

#include <algorithm>

#include "avb/error.hpp"
#include "avb/integrity.hpp"

namespace avb {

const char* component_role_name(ComponentRole role) {
    switch (role) {
        case ComponentRole::CoreExecutable: return "core_executable";
        case ComponentRole::SignatureDb: return "signature_db";
        case ComponentRole::IntegrityDb: return "integrity_db";
        case ComponentRole::StateDb: return "state_db";
    }
    return "unknown";
}

ManifestEntry* TrustedStore::find_role(ComponentRole role) {
    for (auto& entry : manifest) {
        if (entry.role == role) return &entry;
    }
    return nullptr;
}

const ManifestEntry* TrustedStore::find_role(ComponentRole role) const {
    for (const auto& entry : manifest) {
        if (entry.role == role) return &entry;
    }
    return nullptr;
}

std::set<std::uint32_t> select_algorithms(std::uint64_t seed, std::uint32_t n, std::uint32_t k) {
    if (k < 1 || k > n) throw Error(ErrorCode::InvalidK, "need 1 <= k <= N");
    std::vector<std::uint32_t> ids(n);
    for (std::uint32_t i = 0; i < n; ++i) ids[i] = i;
    SplitMix64 rng(seed);
    for (std::uint32_t i = 0; i + 1 < n; ++i) {
        const std::uint32_t j = i + static_cast<std::uint32_t>(rng.next_below(n - i));
        std::swap(ids[i], ids[j]);
    }
    return {ids.begin(), ids.begin() + k};
}

bool manifest_verify(const FileStore& fs, const TrustedStore& store) {
    for (const auto& entry : store.manifest) {
        if (!fs.exists(entry.file)) return false;
        if (fs.entry(entry.file).name != entry.name) return false;
        if (entry.role == ComponentRole::StateDb) continue;
        if (fnv64(fs.read_file(entry.file, ReadView::Raw)) != entry.digest) return false;
    }
    return true;
}

namespace {

std::string fresh_hex_name(FileStore& fs, SplitMix64& rng) {
    static constexpr char digits[] = "0123456789abcdef";
    for (;;) {
        std::uint64_t v = rng.next();
        std::string name(12, '0');
        for (char& c : name) {
            c = digits[v & 0xf];
            v >>= 4;
        }
        if (!fs.find(name)) return name;
    }
}

Bytes pad_and_footer(ByteView encoded, SplitMix64& rng) {
    const std::uint64_t need = encoded.size() + 8;
    std::uint64_t padded = ((need + kPadBlock - 1) / kPadBlock) * kPadBlock;
    padded += rng.next_below(kMaxExtraPadBlocks + 1) * kPadBlock;
    Bytes out(encoded.begin(), encoded.end());
    Bytes noise = rng.next_bytes(padded - 8 - encoded.size());
    out.insert(out.end(), noise.begin(), noise.end());
    put_u64le(out, encoded.size());
    return out;
}

Bytes strip_epoch_layer(ByteView on_disk, std::uint64_t epoch_key) {
    if (on_disk.size() < 8 || on_disk.size() % kPadBlock != 0) {
        throw Error(ErrorCode::TamperDetected, "obfuscated component misshapen");
    }
    const std::uint64_t true_len = get_u64le(on_disk, on_disk.size() - 8);
    if (true_len > on_disk.size() - 8) {
        throw Error(ErrorCode::TamperDetected, "footer length out of range");
    }
    return keystream_transform(epoch_key, on_disk.first(true_len));
}

}  // namespace

Bytes epoch_encode(const TrustedStore& store, ByteView plain, SplitMix64& rng) {
    if (store.epoch == 0) return Bytes(plain.begin(), plain.end());
    return pad_and_footer(keystream_transform(store.epoch_key, plain), rng);
}

void obfuscate_epoch(FileStore& fs, TrustedStore& store, SplitMix64& rng) {
    if (!manifest_verify(fs, store)) {
        throw Error(ErrorCode::SelfCheckFailed, "refusing to obfuscate a compromised install");
    }
    const std::uint64_t new_key = rng.next();
    for (auto& entry : store.manifest) {
        Bytes current = fs.read_file(entry.file, ReadView::Raw);
        Bytes original =
            store.epoch == 0 ? std::move(current) : strip_epoch_layer(current, store.epoch_key);
        Bytes on_disk = pad_and_footer(keystream_transform(new_key, original), rng);
        fs.rename_file(entry.file, fresh_hex_name(fs, rng));
        fs.overwrite_file(entry.file, on_disk);
        entry.name = fs.entry(entry.file).name;
        entry.digest = fnv64(on_disk);
        entry.epoch = store.epoch + 1;
    }
    store.epoch += 1;
    store.epoch_key = new_key;
}

Bytes deobfuscate_component(const FileStore& fs, const TrustedStore& store, ComponentRole role) {
    const ManifestEntry* entry = store.find_role(role);
    if (entry == nullptr) throw Error(ErrorCode::UnknownFile, "no manifest entry for role");
    Bytes on_disk = fs.read_file(entry->file, ReadView::Raw);
    if (role != ComponentRole::StateDb && fnv64(on_disk) != entry->digest) {
        throw Error(ErrorCode::TamperDetected, "component bytes do not match manifest");
    }
    Bytes original =
        entry->epoch == 0 ? std::move(on_disk) : strip_epoch_layer(on_disk, store.epoch_key);
    if (role != ComponentRole::StateDb && fnv64(original) != entry->original_digest) {
        throw Error(ErrorCode::TamperDetected, "recovered bytes do not match install digest");
    }
    return original;
}

const std::vector<DefenseInfo>& defense_catalog() {
    static const std::vector<DefenseInfo> catalog = {
        {"trusted_store", "keys, token, golden MBR on separate hardware", "1.2.1", {}},
        {"self_check", "manifest digest verification before every scan", "1.2.1", {}},
        {"sector_archive_bits", "protected per-sector change marks", "1.2.1", {}},
        {"sealed_databases", "keyed seals over signature/integrity/state data", "1.2.2", {}},
        {"polymorphic_install", "per-install algorithm subsets", "1.2.2", {9}},
        {"obfuscation_epochs", "rotating names, sizes, content signatures", "1.2.2", {35, 36}},
        {"budget_meter", "size-scaled processing break-points", "1.2.3", {16, 9}},
        {"raw_view_scanning", "trusted read path bypassing interceptors", "1.2.4", {}},
        {"second_opinion", "independent engine as external field", "1.2.4", {}},
    };
    return catalog;
}

}  // namespace avb
