#include "avb/engine.hpp"

#include <algorithm>
#include <utility>

#include "avb/error.hpp"

namespace avb {

MbrStatus check_mbr(const VirtualDisk& disk, const TrustedStore& store) {
    const Bytes raw = disk.read_sectors_raw(0, 1);
    const Bytes standard = disk.read_mbr_standard();
    if (raw != standard) return MbrStatus::FacadeDetected;
    if (raw != store.golden_mbr) return MbrStatus::ModifiedDetected;
    return MbrStatus::Consistent;
}

void repair_mbr(VirtualDisk& disk, const TrustedStore& store, AuthToken token) {
    if (!(token == store.token)) {
        throw Error(ErrorCode::Unauthorized, "repair requires the trusted token");
    }
    disk.write_sectors(0, store.golden_mbr);
    disk.set_boot_pointer(0);
    disk.clear_archive_bits({0}, token);
}

EngineInstance EngineInstance::install(const AlgorithmCatalog& catalog,
                                       std::uint64_t install_seed, std::uint32_t k,
                                       BudgetPolicy policy, TrustedStore& store, FileStore& fs) {
    return EngineInstance(catalog, install_seed, k, policy, store, fs);
}

EngineInstance::EngineInstance(const AlgorithmCatalog& catalog, std::uint64_t install_seed,
                               std::uint32_t k, BudgetPolicy policy, TrustedStore& store,
                               FileStore& fs)
    : catalog_(catalog),
      install_seed_(install_seed),
      installed_(select_algorithms(install_seed, catalog.algorithms, k)),
      policy_(policy),
      store_(&store),
      fs_(&fs),
      state_(AuthToken{}),
      pad_rng_(0) {
    catalog_.validate();

    SplitMix64 keygen(install_seed ^ 0x5eed5eed5eed5eedull);
    store_->seal_key = keygen.next();
    store_->definitions_key = keygen.next();
    store_->token = AuthToken{keygen.next()};
    store_->epoch = 0;
    store_->epoch_key = 0;
    store_->manifest.clear();
    pad_rng_ = SplitMix64(keygen.next());
    state_ = StateDb(store_->token);

    fs_->disk().bind_token(store_->token);
    store_->golden_mbr = fs_->disk().read_sectors_raw(0, 1);

    const Bytes core = build_core_image();

    SignatureDb sig;
    for (std::uint32_t f = 0; f < catalog_.families; ++f) {
        for (std::uint32_t a : installed_) {
            sig.patterns[{f, a}] = AlgorithmCatalog::pattern(f, a);
        }
    }
    const Bytes sig_on_disk =
        keystream_transform(store_->definitions_key, save_signature_db(sig, store_->seal_key));

    IntegrityDb integrity;
    for (FileId id : fs_->file_ids()) {
        if (fs_->entry(id).kind != FileKind::AvComponent) {
            integrity.expected[id] = fnv64(fs_->read_file(id, ReadView::Raw));
        }
    }
    const Bytes integrity_on_disk = save_integrity_db(integrity, store_->seal_key);
    const Bytes state_on_disk = save_state(state_, store_->seal_key);

    const auto add_component = [&](ComponentRole role, const char* name, const Bytes& content) {
        const FileId id = fs_->create_file(name, FileKind::AvComponent, content);
        store_->manifest.push_back(
            {role, id, name, fnv64(content), fnv64(content), 0});
    };
    add_component(ComponentRole::CoreExecutable, kInitialCoreName, core);
    add_component(ComponentRole::SignatureDb, kInitialSigDbName, sig_on_disk);
    add_component(ComponentRole::IntegrityDb, kInitialIntegrityDbName, integrity_on_disk);
    add_component(ComponentRole::StateDb, kInitialStateDbName, state_on_disk);

    fs_->set_write_hook([this](FileId id) { on_file_written(id); });
}

EngineInstance::EngineInstance(const EngineInstance& other, FileStore& fs, TrustedStore& store)
    : catalog_(other.catalog_),
      install_seed_(other.install_seed_),
      installed_(other.installed_),
      policy_(other.policy_),
      store_(&store),
      fs_(&fs),
      state_(other.state_),
      current_tick_(other.current_tick_),
      pad_rng_(other.pad_rng_) {
    fs_->set_write_hook([this](FileId id) { on_file_written(id); });
}

EngineInstance::EngineInstance(EngineInstance&& other) noexcept
    : catalog_(other.catalog_),
      install_seed_(other.install_seed_),
      installed_(std::move(other.installed_)),
      policy_(other.policy_),
      store_(other.store_),
      fs_(other.fs_),
      state_(std::move(other.state_)),
      current_tick_(other.current_tick_),
      pad_rng_(other.pad_rng_) {
    other.fs_ = nullptr;
    other.store_ = nullptr;
    if (fs_) fs_->set_write_hook([this](FileId id) { on_file_written(id); });
}

EngineInstance& EngineInstance::operator=(EngineInstance&& other) noexcept {
    if (this != &other) {
        catalog_ = other.catalog_;
        install_seed_ = other.install_seed_;
        installed_ = std::move(other.installed_);
        policy_ = other.policy_;
        store_ = other.store_;
        fs_ = other.fs_;
        state_ = std::move(other.state_);
        current_tick_ = other.current_tick_;
        pad_rng_ = other.pad_rng_;
        other.fs_ = nullptr;
        other.store_ = nullptr;
        if (fs_) fs_->set_write_hook([this](FileId id) { on_file_written(id); });
    }
    return *this;
}

Bytes EngineInstance::build_core_image() const {
    SplitMix64 rng(install_seed_ ^ 0xc0dec0dec0dec0deull);
    return rng.next_bytes(8209);
}

void EngineInstance::on_file_written(FileId id) {
    state_.set_state(id, ScanStatus::Unscanned, current_tick_, store_->token);
    persist_state();
}

void EngineInstance::persist_state() {
    ManifestEntry* entry = store_->find_role(ComponentRole::StateDb);
    if (entry == nullptr) return;
    const Bytes plain = save_state(state_, store_->seal_key);
    const Bytes on_disk = epoch_encode(*store_, plain, pad_rng_);
    fs_->overwrite_file(entry->file, on_disk);
    entry->digest = fnv64(on_disk);
    clear_file_bits(entry->file);
}

void EngineInstance::clear_file_bits(FileId id) {
    const FileEntry& entry = fs_->entry(id);
    std::set<SectorIndex> sectors(entry.sectors.begin(), entry.sectors.end());
    fs_->disk().clear_archive_bits(sectors, store_->token);
}

bool EngineInstance::self_check() const { return manifest_verify(*fs_, *store_); }

bool EngineInstance::detect_rootkit(FileId id) const {
    return fs_->read_file(id, ReadView::Raw) != fs_->read_file(id, ReadView::Standard);
}

MbrStatus EngineInstance::check_mbr() const { return avb::check_mbr(fs_->disk(), *store_); }

void EngineInstance::repair_mbr() { avb::repair_mbr(fs_->disk(), *store_, store_->token); }

std::optional<EngineInstance::LoadedDbs> EngineInstance::load_databases(
    const ScanFlags& flags) const {
    if (!flags.no_seal_checks) {
        try {
            LoadedDbs dbs;
            const Bytes sig_plain = keystream_transform(
                store_->definitions_key,
                deobfuscate_component(*fs_, *store_, ComponentRole::SignatureDb));
            dbs.sig = load_signature_db(sig_plain, store_->seal_key);
            dbs.integrity = load_integrity_db(
                deobfuscate_component(*fs_, *store_, ComponentRole::IntegrityDb),
                store_->seal_key);
            return dbs;
        } catch (const Error&) {
            return std::nullopt;
        }
    }
    // Seal checking disabled: take whatever parses, fall back to empty.
    LoadedDbs dbs;
    const auto read_role = [&](ComponentRole role) -> Bytes {
        const ManifestEntry* entry = store_->find_role(role);
        if (entry == nullptr || !fs_->exists(entry->file)) return {};
        try {
            return deobfuscate_component(*fs_, *store_, role);
        } catch (const Error&) {
            return fs_->read_file(entry->file, ReadView::Raw);
        }
    };
    if (auto sig = parse_signature_db_unverified(
            keystream_transform(store_->definitions_key, read_role(ComponentRole::SignatureDb)))) {
        dbs.sig = std::move(*sig);
    }
    if (auto integrity = parse_integrity_db_unverified(read_role(ComponentRole::IntegrityDb))) {
        dbs.integrity = std::move(*integrity);
    }
    return dbs;
}

Verdict EngineInstance::scan_content(const SignatureDb& sig, const FileStore& fs, FileId id,
                                     ReadView view, Meter& meter, bool lenient_format,
                                     bool cross_view_flagged) const {
    const Bytes content = fs.read_file(id, view);
    if (meter.consume(content.size()) == MeterResult::Break) {
        return Verdict::suspicious(Verdict::Reason::Break);
    }
    Bytes decompressed;
    const Bytes* haystack = &content;
    if (fs.entry(id).kind == FileKind::CompressedArchive) {
        RleResult result = rle_decompress_stream(content, meter);
        if (result.status == RleStatus::Break) {
            return Verdict::suspicious(Verdict::Reason::Break);
        }
        if (result.status == RleStatus::FormatError) {
            if (!lenient_format) return Verdict::suspicious(Verdict::Reason::FormatError);
            decompressed.clear();
        } else {
            decompressed = std::move(result.output);
        }
        haystack = &decompressed;
    }
    for (const auto& [fa, pattern] : sig.patterns) {
        if (!installed_.contains(fa.second)) continue;
        const auto hit =
            std::search(haystack->begin(), haystack->end(), pattern.begin(), pattern.end());
        if (hit != haystack->end()) return Verdict::infected(fa.first, fa.second);
    }
    if (cross_view_flagged) return Verdict::suspicious(Verdict::Reason::CrossViewMismatch);
    return Verdict::clean();
}

Verdict EngineInstance::scan_file(FileId id, ReadView view, Meter& meter) {
    if (!fs_->exists(id)) throw Error(ErrorCode::UnknownFile, "scan_file");
    if (!self_check()) {
        throw Error(ErrorCode::SelfCheckFailed, "engine compromised: manifest check failed");
    }
    const auto dbs = load_databases({});
    if (!dbs) {
        throw Error(ErrorCode::TamperDetected, "engine compromised: database seal failure");
    }
    const Verdict verdict = scan_content(dbs->sig, *fs_, id, view, meter, false, false);
    switch (verdict.kind) {
        case Verdict::Kind::Clean:
            state_.set_state(id, ScanStatus::AlreadyScanned, current_tick_, store_->token);
            break;
        case Verdict::Kind::Infected:
            state_.set_infected(id, current_tick_, verdict.family, verdict.algorithm,
                                store_->token);
            break;
        case Verdict::Kind::Suspicious:
            state_.set_state(id, ScanStatus::Suspicious, current_tick_, store_->token);
            break;
    }
    persist_state();
    return verdict;
}

ScanReport EngineInstance::full_scan(std::uint64_t tick, const ScanFlags& flags) {
    return run_pipeline(ScanMode::Full, tick, flags);
}

ScanReport EngineInstance::incremental_scan(std::uint64_t tick, const ScanFlags& flags) {
    return run_pipeline(ScanMode::Incremental, tick, flags);
}

ScanReport EngineInstance::run_pipeline(ScanMode mode, std::uint64_t tick,
                                        const ScanFlags& flags) {
    current_tick_ = tick;
    ScanReport report;
    report.tick = tick;
    report.mode = mode;

    const bool intact = self_check();
    if (!intact) {
        if (!flags.skip_self_check) {
            report.engine_status = EngineStatus::Compromised;
            return report;
        }
        // Compromised engine running anyway: it reports whatever the
        // attacker's replacement wants, which is "all clean".
        report.forged_clean = true;
        for (FileId id : fs_->file_ids()) {
            report.files.push_back({id, fs_->entry(id).name, Verdict::clean(), false, 0});
        }
        return report;
    }

    const auto dbs = load_databases(flags);
    if (!dbs) {
        report.engine_status = EngineStatus::Compromised;
        return report;
    }

    if (!flags.no_seal_checks && !flags.trust_state_db) {
        try {
            const Bytes state_plain =
                deobfuscate_component(*fs_, *store_, ComponentRole::StateDb);
            load_state(state_plain, store_->seal_key, store_->token);
        } catch (const Error&) {
            report.state_db_tampered = true;
        }
    }

    std::optional<std::map<FileId, std::pair<ScanStatus, std::uint64_t>>> trusted_state;
    if (flags.trust_state_db) {
        const ManifestEntry* entry = store_->find_role(ComponentRole::StateDb);
        if (entry != nullptr && fs_->exists(entry->file)) {
            trusted_state = parse_state_unverified(fs_->read_file(entry->file, ReadView::Raw));
        }
    }

    if (flags.no_trusted_mbr) {
        // Without the trusted raw view the engine can only compare the
        // standard view against the golden copy; a facade passes this check.
        report.mbr_status = fs_->disk().read_mbr_standard() == store_->golden_mbr
                                ? MbrStatus::Consistent
                                : MbrStatus::ModifiedDetected;
    } else {
        report.mbr_status = check_mbr();
    }

    std::set<FileId> flagged;
    if (!flags.no_rootkit_sweep) {
        for (FileId id : fs_->file_ids()) {
            if (detect_rootkit(id)) flagged.insert(id);
        }
    }
    report.rootkits.assign(flagged.begin(), flagged.end());
    report.used_raw_view = !flagged.empty();
    const ReadView view = flagged.empty() ? ReadView::Standard : ReadView::Raw;

    std::set<SectorIndex> dirty;
    if (mode == ScanMode::Incremental && !flags.trust_state_db) {
        dirty = fs_->disk().changed_sectors(store_->token);
    }
    const auto owns_dirty_sector = [&](FileId id) {
        for (SectorIndex s : fs_->entry(id).sectors) {
            if (dirty.contains(s)) return true;
        }
        return false;
    };

    for (FileId id : fs_->file_ids()) {
        bool candidate = true;
        if (flags.trust_state_db) {
            candidate = true;
            if (trusted_state) {
                auto it = trusted_state->find(id);
                if (it != trusted_state->end() && it->second.first == ScanStatus::AlreadyScanned) {
                    candidate = false;
                }
            }
        } else if (mode == ScanMode::Incremental) {
            candidate = owns_dirty_sector(id) ||
                        state_.get_state(id).status == ScanStatus::Unscanned ||
                        flagged.contains(id);
        }

        FileScanRecord record;
        record.id = id;
        record.name = fs_->entry(id).name;
        if (candidate) {
            Meter meter = flags.no_budget ? Meter::unlimited()
                                          : Meter(policy_, fs_->entry(id).length);
            record.verdict = scan_content(dbs->sig, *fs_, id, view, meter, flags.lenient_format,
                                          flagged.contains(id));
            record.fresh = true;
            record.bytes = meter.consumed();
            switch (record.verdict.kind) {
                case Verdict::Kind::Clean:
                    state_.set_state(id, ScanStatus::AlreadyScanned, tick, store_->token);
                    if (!flags.trust_state_db) clear_file_bits(id);
                    break;
                case Verdict::Kind::Infected:
                    state_.set_infected(id, tick, record.verdict.family,
                                        record.verdict.algorithm, store_->token);
                    if (!flags.trust_state_db) clear_file_bits(id);
                    break;
                case Verdict::Kind::Suspicious:
                    state_.set_state(id, ScanStatus::Suspicious, tick, store_->token);
                    break;
            }
        } else {
            record.fresh = false;
            record.bytes = 0;
            if (flags.trust_state_db) {
                record.verdict = Verdict::clean();
                const auto it = trusted_state->find(id);
                state_.adopt(id, ScanStatus::AlreadyScanned,
                             it != trusted_state->end() ? it->second.second : tick,
                             store_->token);
            } else {
                const StateEntry entry = state_.get_state(id);
                if (entry.status == ScanStatus::Infected) {
                    record.verdict = entry.infected_by
                                         ? Verdict::infected(entry.infected_by->first,
                                                             entry.infected_by->second)
                                         : Verdict::infected(0, 0);
                } else {
                    record.verdict = Verdict::clean();
                }
            }
        }
        report.files.push_back(std::move(record));
    }

    for (const FileScanRecord& record : report.files) {
        if (record.fresh) {
            ++report.files_scanned;
            report.bytes_consumed += record.bytes;
        }
    }
    persist_state();
    return report;
}

void EngineInstance::run_epoch(SplitMix64& rng) {
    persist_state();
    obfuscate_epoch(*fs_, *store_, rng);
    for (const ManifestEntry& entry : store_->manifest) {
        clear_file_bits(entry.file);
    }
}

SecondOpinionReport EngineInstance::second_opinion_scan(
    const FileStore& target_fs, const std::vector<ManifestEntry>& target_manifest) const {
    SecondOpinionReport report;
    const auto dbs = load_databases({});
    if (!dbs) {
        throw Error(ErrorCode::TamperDetected, "reference engine databases failed verification");
    }
    for (const ManifestEntry& entry : target_manifest) {
        ComponentCheck check;
        check.role = entry.role;
        check.name = entry.name;
        check.present = target_fs.exists(entry.file) &&
                        target_fs.entry(entry.file).name == entry.name;
        if (check.present && entry.role != ComponentRole::StateDb) {
            check.modified =
                fnv64(target_fs.read_file(entry.file, ReadView::Raw)) != entry.digest;
        }
        report.components.push_back(std::move(check));
    }
    for (FileId id : target_fs.file_ids()) {
        if (target_fs.read_file(id, ReadView::Raw) != target_fs.read_file(id, ReadView::Standard)) {
            report.rootkits.push_back(id);
        }
    }
    for (FileId id : target_fs.file_ids()) {
        Meter meter(policy_, target_fs.entry(id).length);
        FileScanRecord record;
        record.id = id;
        record.name = target_fs.entry(id).name;
        record.fresh = true;
        record.verdict = scan_content(dbs->sig, target_fs, id, ReadView::Raw, meter, false, false);
        record.bytes = meter.consumed();
        report.bytes_consumed += record.bytes;
        report.files.push_back(std::move(record));
    }
    return report;
}

}  // namespace avb
