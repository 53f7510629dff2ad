#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avb/budget.hpp"
#include "avb/catalog.hpp"
#include "avb/fstore.hpp"
#include "avb/integrity.hpp"
#include "avb/selfprotect.hpp"
#include "avb/types.hpp"

namespace avb {

inline constexpr const char* kInitialCoreName = "avcore.bin";
inline constexpr const char* kInitialSigDbName = "avsig.db";
inline constexpr const char* kInitialIntegrityDbName = "avint.db";
inline constexpr const char* kInitialStateDbName = "avstate.db";

struct Verdict {
    enum class Kind { Clean, Infected, Suspicious };
    enum class Reason { None, Break, FormatError, CrossViewMismatch };

    Kind kind = Kind::Clean;
    std::uint32_t family = 0;
    std::uint32_t algorithm = 0;
    Reason reason = Reason::None;

    static Verdict clean() { return {}; }
    static Verdict infected(std::uint32_t f, std::uint32_t a) {
        return {Kind::Infected, f, a, Reason::None};
    }
    static Verdict suspicious(Reason r) { return {Kind::Suspicious, 0, 0, r}; }

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

enum class MbrStatus { Consistent, FacadeDetected, ModifiedDetected };

enum class EngineStatus { Ok, Compromised };

enum class ScanMode { Full, Incremental };

/// Ablation switches: each one turns a defense off so scenarios can show the
/// attack it would have stopped succeeding.
struct ScanFlags {
    /// Trust the persisted state file's AlreadyScanned marks as skip
    /// authority (the pre-archive-bit scanner the forgery attack defeats).
    bool trust_state_db = false;
    /// Skip the manifest self-check; a compromised install then reports
    /// everything clean instead of refusing to run.
    bool skip_self_check = false;
    bool no_rootkit_sweep = false;
    bool no_budget = false;
    bool no_seal_checks = false;
    bool no_trusted_mbr = false;
    /// Treat malformed archives as empty instead of Suspicious.
    bool lenient_format = false;
};

struct FileScanRecord {
    FileId id = 0;
    std::string name;
    Verdict verdict;
    /// True when the file's content was actually read this scan, false when
    /// the verdict was carried over from bookkeeping.
    bool fresh = false;
    std::uint64_t bytes = 0;
};

struct ScanReport {
    std::uint64_t tick = 0;
    ScanMode mode = ScanMode::Full;
    EngineStatus engine_status = EngineStatus::Ok;
    MbrStatus mbr_status = MbrStatus::Consistent;
    std::vector<FileId> rootkits;
    bool used_raw_view = false;
    /// Seal tripwire on the persisted state file; the scan still runs since
    /// state has no skip authority.
    bool state_db_tampered = false;
    /// A compromised install with self-check disabled fabricated this
    /// report's all-clean verdicts.
    bool forged_clean = false;
    std::vector<FileScanRecord> files;
    std::uint64_t files_scanned = 0;
    std::uint64_t bytes_consumed = 0;
};

struct ComponentCheck {
    ComponentRole role;
    std::string name;
    bool present = false;
    bool modified = false;
};

struct SecondOpinionReport {
    std::vector<ComponentCheck> components;
    std::vector<FileId> rootkits;
    std::vector<FileScanRecord> files;
    std::uint64_t bytes_consumed = 0;
};

MbrStatus check_mbr(const VirtualDisk& disk, const TrustedStore& store);
void repair_mbr(VirtualDisk& disk, const TrustedStore& store, AuthToken token);

/// The anti-virus under test. An instance is bound to the file store it
/// protects and to its trusted store; scans mutate only scan state and
/// archive bits.
class EngineInstance {
public:
    /// Selects k algorithms from the catalog, builds and seals the
    /// databases, writes the component files, and records them in the
    /// trusted store's manifest.
    static EngineInstance install(const AlgorithmCatalog& catalog, std::uint64_t install_seed,
                                  std::uint32_t k, BudgetPolicy policy, TrustedStore& store,
                                  FileStore& fs);

    /// Rebinds a copied engine onto a copied world (scenario cloning).
    EngineInstance(const EngineInstance& other, FileStore& fs, TrustedStore& store);
    // The write hook captures `this`, so moves must re-register it.
    EngineInstance(EngineInstance&& other) noexcept;
    EngineInstance& operator=(EngineInstance&& other) noexcept;

    ScanReport full_scan(std::uint64_t tick, const ScanFlags& flags = {});
    ScanReport incremental_scan(std::uint64_t tick, const ScanFlags& flags = {});

    /// Per-file scan against freshly verified databases.
    Verdict scan_file(FileId id, ReadView view, Meter& meter);

    bool self_check() const;
    bool detect_rootkit(FileId id) const;
    MbrStatus check_mbr() const;
    void repair_mbr();

    /// Persists current scan state, then runs one obfuscation round over all
    /// component files.
    void run_epoch(SplitMix64& rng);

    /// Scans another engine's world read-only: verifies that engine's
    /// manifest digests, sweeps for rootkits, and scans every file raw with
    /// this engine's own databases. Touches no state in the target world.
    SecondOpinionReport second_opinion_scan(const FileStore& target_fs,
                                            const std::vector<ManifestEntry>& target_manifest) const;

    const std::set<std::uint32_t>& installed() const { return installed_; }
    const AlgorithmCatalog& catalog() const { return catalog_; }
    const StateDb& state() const { return state_; }
    const BudgetPolicy& policy() const { return policy_; }
    std::uint64_t current_tick() const { return current_tick_; }
    void set_current_tick(std::uint64_t tick) { current_tick_ = tick; }

private:
    EngineInstance(const AlgorithmCatalog& catalog, std::uint64_t install_seed, std::uint32_t k,
                   BudgetPolicy policy, TrustedStore& store, FileStore& fs);

    struct LoadedDbs {
        SignatureDb sig;
        IntegrityDb integrity;
    };

    ScanReport run_pipeline(ScanMode mode, std::uint64_t tick, const ScanFlags& flags);
    std::optional<LoadedDbs> load_databases(const ScanFlags& flags) const;
    Verdict scan_content(const SignatureDb& sig, const FileStore& fs, FileId id, ReadView view,
                         Meter& meter, bool lenient_format, bool cross_view_flagged) const;
    void on_file_written(FileId id);
    void persist_state();
    void clear_file_bits(FileId id);
    Bytes build_core_image() const;

    AlgorithmCatalog catalog_;
    std::uint64_t install_seed_ = 0;
    std::set<std::uint32_t> installed_;
    BudgetPolicy policy_;
    TrustedStore* store_ = nullptr;
    FileStore* fs_ = nullptr;
    StateDb state_;
    std::uint64_t current_tick_ = 0;
    SplitMix64 pad_rng_;
};

}  // namespace avb
