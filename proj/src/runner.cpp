#include "avb/runner.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

#include "avb/attacks.hpp"
#include "avb/engine.hpp"
#include "avb/error.hpp"

namespace avb {

using nlohmann::json;

namespace {

struct ScanSnapshot {
    std::uint64_t tick = 0;
    EngineStatus status = EngineStatus::Ok;
    MbrStatus mbr = MbrStatus::Consistent;
    bool forged_clean = false;
    bool state_tampered = false;
    std::set<FileId> rootkits;
    std::map<FileId, Verdict> verdicts;
};

struct OpinionSnapshot {
    std::uint64_t tick = 0;
    bool any_component_bad = false;
    std::set<FileId> rootkits;
    std::map<FileId, Verdict> verdicts;
};

struct AttackRecord {
    Action::Type type = Action::Type::Infect;
    std::uint64_t tick = 0;
    std::string target;
    FileId target_id = 0;
    std::optional<bool> expect_defeated;
    bool immediate_defeat = false;
    std::string note;
};

const char* verdict_name(const Verdict& v) {
    switch (v.kind) {
        case Verdict::Kind::Clean: return "clean";
        case Verdict::Kind::Infected: return "infected";
        case Verdict::Kind::Suspicious: return "suspicious";
    }
    return "unknown";
}

const char* reason_name(Verdict::Reason reason) {
    switch (reason) {
        case Verdict::Reason::None: return "none";
        case Verdict::Reason::Break: return "break";
        case Verdict::Reason::FormatError: return "format_error";
        case Verdict::Reason::CrossViewMismatch: return "cross_view_mismatch";
    }
    return "unknown";
}

const char* mbr_name(MbrStatus status) {
    switch (status) {
        case MbrStatus::Consistent: return "consistent";
        case MbrStatus::FacadeDetected: return "facade_detected";
        case MbrStatus::ModifiedDetected: return "modified_detected";
    }
    return "unknown";
}

json verdict_record_to_json(const FileScanRecord& record) {
    json out;
    out["file"] = record.name;
    out["fresh"] = record.fresh;
    out["bytes"] = record.bytes;
    out["verdict"] = verdict_name(record.verdict);
    if (record.verdict.kind == Verdict::Kind::Infected) {
        out["family"] = record.verdict.family;
        out["algorithm"] = record.verdict.algorithm;
    } else if (record.verdict.kind == Verdict::Kind::Suspicious) {
        out["reason"] = reason_name(record.verdict.reason);
    }
    return out;
}

std::string attack_short_name(Action::Type type) {
    std::string name = action_type_name(type);
    if (name.rfind("attack.", 0) == 0) name = name.substr(7);
    return name;
}

FileKind kind_from_string(const std::string& kind) {
    if (kind == "executable") return FileKind::Executable;
    if (kind == "archive") return FileKind::CompressedArchive;
    return FileKind::Data;
}

Bytes malformed_container(const std::string& variant, SplitMix64& rng) {
    Bytes out{'R', 'L', 'E', '1'};
    const std::uint32_t runs = 3 + static_cast<std::uint32_t>(rng.next_below(5));
    put_u32le(out, runs);
    for (std::uint32_t r = 0; r < runs; ++r) {
        put_u16le(out, static_cast<std::uint16_t>(1 + rng.next_below(200)));
        out.push_back(static_cast<std::uint8_t>(rng.next_below(256)));
    }
    if (variant == "bad_magic") {
        out[3] = 'X';
    } else if (variant == "zero_count") {
        out[8] = 0;
        out[9] = 0;
    } else if (variant == "length_lie") {
        Bytes recount;
        put_u32le(recount, runs + 2);
        std::copy(recount.begin(), recount.end(), out.begin() + 4);
    } else {  // truncated
        out.resize(out.size() - 2);
    }
    return out;
}

class ScenarioRun {
public:
    explicit ScenarioRun(const Scenario& s)
        : scenario_(s),
          rng_(s.seed),
          disk_(s.disk_sectors, s.disk_sector_size),
          fs_(disk_),
          catalog_{s.catalog_algorithms, s.catalog_families},
          policy_{s.budget_b0, s.budget_alpha} {}

    RunOutcome run() {
        for (const ScenarioFile& file : scenario_.files) {
            const Bytes content = file.kind == "archive"
                                      ? rle_compress(rng_.next_bytes(file.size))
                                      : rng_.next_bytes(file.size);
            ids_[file.name] = fs_.create_file(file.name, kind_from_string(file.kind), content);
        }
        engine_.emplace(EngineInstance::install(catalog_, rng_.next(), scenario_.install_k,
                                                policy_, store_, fs_));
        flags_.trust_state_db = scenario_.flags.trust_state_db;
        flags_.skip_self_check = scenario_.flags.skip_self_check;
        flags_.no_rootkit_sweep = scenario_.flags.no_rootkit_sweep;
        flags_.no_budget = scenario_.flags.no_budget;
        flags_.no_seal_checks = scenario_.flags.no_seal_checks;
        flags_.no_trusted_mbr = scenario_.flags.no_trusted_mbr;
        flags_.lenient_format = scenario_.flags.lenient_format;

        for (const Action& action : scenario_.timeline) {
            run_auto_epochs(action.tick);
            last_tick_ = action.tick;
            engine_->set_current_tick(action.tick);
            execute(action);
        }
        return assemble();
    }

private:
    void run_auto_epochs(std::uint64_t up_to) {
        const std::uint64_t period = scenario_.obfuscation_period;
        if (period == 0) return;
        for (std::uint64_t m = (last_tick_ / period + 1) * period; m <= up_to; m += period) {
            engine_->set_current_tick(m);
            run_epoch_event(m);
        }
    }

    void run_epoch_event(std::uint64_t tick) {
        json event;
        event["tick"] = tick;
        try {
            engine_->run_epoch(rng_);
            event["type"] = "epoch";
            event["epoch"] = store_.epoch;
        } catch (const Error& e) {
            event["type"] = "epoch_failed";
            event["error"] = error_code_name(e.code());
        }
        events_.push_back(std::move(event));
    }

    void record_scan(const ScanReport& report) {
        ScanSnapshot snap;
        snap.tick = report.tick;
        snap.status = report.engine_status;
        snap.mbr = report.mbr_status;
        snap.forged_clean = report.forged_clean;
        snap.state_tampered = report.state_db_tampered;
        snap.rootkits.insert(report.rootkits.begin(), report.rootkits.end());
        for (const FileScanRecord& record : report.files) snap.verdicts[record.id] = record.verdict;
        scan_log_.push_back(std::move(snap));

        json out;
        out["tick"] = report.tick;
        out["mode"] = report.mode == ScanMode::Full ? "full" : "incremental";
        out["engine_status"] =
            report.engine_status == EngineStatus::Ok ? "ok" : "compromised";
        out["mbr_status"] = mbr_name(report.mbr_status);
        json rootkits = json::array();
        for (FileId id : report.rootkits) rootkits.push_back(fs_.entry(id).name);
        out["rootkits"] = std::move(rootkits);
        out["used_raw_view"] = report.used_raw_view;
        out["state_db_tampered"] = report.state_db_tampered;
        out["forged_clean"] = report.forged_clean;
        out["files_scanned"] = report.files_scanned;
        out["bytes_consumed"] = report.bytes_consumed;
        json verdicts = json::array();
        for (const FileScanRecord& record : report.files) {
            verdicts.push_back(verdict_record_to_json(record));
        }
        out["verdicts"] = std::move(verdicts);
        scans_.push_back(std::move(out));

        total_bytes_ += report.bytes_consumed;
        if (report.forged_clean) ++false_assurances_;
    }

    void record_opinion(const SecondOpinionReport& report, std::uint64_t tick) {
        OpinionSnapshot snap;
        snap.tick = tick;
        for (const ComponentCheck& check : report.components) {
            if (!check.present || check.modified) snap.any_component_bad = true;
        }
        snap.rootkits.insert(report.rootkits.begin(), report.rootkits.end());
        for (const FileScanRecord& record : report.files) snap.verdicts[record.id] = record.verdict;
        opinion_log_.push_back(std::move(snap));

        json out;
        out["tick"] = tick;
        json components = json::array();
        for (const ComponentCheck& check : report.components) {
            components.push_back({{"role", component_role_name(check.role)},
                                  {"name", check.name},
                                  {"present", check.present},
                                  {"modified", check.modified}});
        }
        out["components"] = std::move(components);
        json rootkits = json::array();
        for (FileId id : report.rootkits) rootkits.push_back(fs_.entry(id).name);
        out["rootkits"] = std::move(rootkits);
        out["bytes_consumed"] = report.bytes_consumed;
        json verdicts = json::array();
        for (const FileScanRecord& record : report.files) {
            verdicts.push_back(verdict_record_to_json(record));
        }
        out["verdicts"] = std::move(verdicts);
        opinions_.push_back(std::move(out));

        total_bytes_ += report.bytes_consumed;
    }

    AttackRecord& push_attack(const Action& action) {
        AttackRecord record;
        record.type = action.type;
        record.tick = action.tick;
        record.expect_defeated = action.expect_defeated;
        attack_log_.push_back(std::move(record));
        return attack_log_.back();
    }

    void execute(const Action& action) {
        switch (action.type) {
            case Action::Type::ScanFull:
                record_scan(engine_->full_scan(action.tick, flags_));
                break;
            case Action::Type::ScanIncremental:
                record_scan(engine_->incremental_scan(action.tick, flags_));
                break;
            case Action::Type::Epoch:
                run_epoch_event(action.tick);
                break;
            case Action::Type::SecondOpinion: {
                VirtualDisk ref_disk(512, scenario_.disk_sector_size);
                FileStore ref_fs(ref_disk);
                TrustedStore ref_store;
                EngineInstance reference = EngineInstance::install(
                    catalog_, rng_.next(), scenario_.install_k, policy_, ref_store, ref_fs);
                record_opinion(reference.second_opinion_scan(fs_, store_.manifest), action.tick);
                break;
            }
            case Action::Type::RepairMbr: {
                engine_->repair_mbr();
                events_.push_back({{"tick", action.tick},
                                   {"type", "repair_mbr"},
                                   {"mbr_after", mbr_name(engine_->check_mbr())}});
                break;
            }
            case Action::Type::Write: {
                const FileId id = ids_.at(action.target);
                const std::uint64_t size = action.size.value_or(fs_.entry(id).length);
                fs_.overwrite_file(id, rng_.next_bytes(size));
                events_.push_back({{"tick", action.tick},
                                   {"type", "write"},
                                   {"target", action.target},
                                   {"bytes", size}});
                break;
            }
            case Action::Type::Infect: {
                AttackRecord& record = push_attack(action);
                record.target = action.target;
                record.target_id = ids_.at(action.target);
                const VirusSample sample = make_virus_sample(
                    catalog_, action.family,
                    action.evades ? *action.evades : engine_->installed(), rng_);
                const Bytes original = infect_file(fs_, record.target_id, sample);
                pre_infection_.try_emplace(record.target_id, original);
                break;
            }
            case Action::Type::FlipState: {
                AttackRecord& record = push_attack(action);
                record.target = action.target;
                record.target_id = ids_.at(action.target);
                const auto state_file = fs_.find(kInitialStateDbName);
                if (!state_file) {
                    record.immediate_defeat = true;
                    record.note = "state file not found";
                } else if (!attack_flip_state(fs_, *state_file, record.target_id)) {
                    record.immediate_defeat = true;
                    record.note = "state file unparsable";
                }
                break;
            }
            case Action::Type::TamperDb: {
                AttackRecord& record = push_attack(action);
                record.target = action.db;
                const char* name = action.db == "signature" ? kInitialSigDbName
                                                            : kInitialIntegrityDbName;
                const auto db_file = fs_.find(name);
                if (!db_file) {
                    record.immediate_defeat = true;
                    record.note = "database file not found";
                } else {
                    attack_tamper_db(fs_, *db_file, rng_);
                }
                break;
            }
            case Action::Type::SnapshotKnowledge:
                push_attack(action);
                knowledge_ = snapshot_knowledge(fs_);
                break;
            case Action::Type::ReplaceAv: {
                AttackRecord& record = push_attack(action);
                const ReplacedReport replaced = attack_replace_av_executable(
                    fs_, knowledge_.value_or(AttackKnowledge{}), rng_);
                record.note = std::to_string(replaced.replaced.size()) + " replaced";
                if (replaced.replaced.empty()) record.immediate_defeat = true;
                break;
            }
            case Action::Type::PlantBomb: {
                AttackRecord& record = push_attack(action);
                record.target = action.name;
                record.target_id =
                    attack_plant_bomb(fs_, action.runs, action.value, action.name);
                ids_[action.name] = record.target_id;
                break;
            }
            case Action::Type::FacadeMbr: {
                AttackRecord& record = push_attack(action);
                (void)record;
                attack_facade_mbr(disk_, rng_.next_bytes(disk_.sector_size()));
                break;
            }
            case Action::Type::InstallRootkit: {
                AttackRecord& record = push_attack(action);
                record.target = action.target;
                record.target_id = ids_.at(action.target);
                const auto clean = pre_infection_.find(record.target_id);
                attack_install_rootkit(fs_, record.target_id,
                                       clean != pre_infection_.end()
                                           ? clean->second
                                           : fs_.read_file(record.target_id, ReadView::Raw));
                break;
            }
            case Action::Type::PlantMalformed: {
                AttackRecord& record = push_attack(action);
                record.target = action.name;
                record.target_id = fs_.create_file(
                    action.name, FileKind::CompressedArchive,
                    malformed_container(action.variant, rng_));
                ids_[action.name] = record.target_id;
                break;
            }
        }
    }

    bool judged_defeated(const AttackRecord& record) const {
        if (record.immediate_defeat) return true;
        const auto scans_after = [&](auto&& predicate) {
            return std::any_of(scan_log_.begin(), scan_log_.end(), [&](const ScanSnapshot& s) {
                return s.tick > record.tick && predicate(s);
            });
        };
        const auto opinions_after = [&](auto&& predicate) {
            return std::any_of(opinion_log_.begin(), opinion_log_.end(),
                               [&](const OpinionSnapshot& o) {
                                   return o.tick > record.tick && predicate(o);
                               });
        };
        const auto verdict_is = [&](const auto& snap, Verdict::Kind kind) {
            const auto it = snap.verdicts.find(record.target_id);
            return it != snap.verdicts.end() && it->second.kind == kind;
        };
        switch (record.type) {
            case Action::Type::Infect:
                return scans_after([&](const ScanSnapshot& s) {
                           return verdict_is(s, Verdict::Kind::Infected);
                       }) ||
                       opinions_after([&](const OpinionSnapshot& o) {
                           return verdict_is(o, Verdict::Kind::Infected);
                       });
            case Action::Type::FlipState:
                return scans_after([&](const ScanSnapshot& s) {
                    return verdict_is(s, Verdict::Kind::Infected) || s.state_tampered;
                });
            case Action::Type::TamperDb:
                return scans_after([&](const ScanSnapshot& s) {
                    return s.status == EngineStatus::Compromised;
                });
            case Action::Type::SnapshotKnowledge:
                return false;
            case Action::Type::ReplaceAv:
                return scans_after([&](const ScanSnapshot& s) {
                           return s.status == EngineStatus::Compromised;
                       }) ||
                       opinions_after(
                           [&](const OpinionSnapshot& o) { return o.any_component_bad; });
            case Action::Type::PlantBomb:
                return scans_after([&](const ScanSnapshot& s) {
                    const auto it = s.verdicts.find(record.target_id);
                    return it != s.verdicts.end() &&
                           it->second.kind == Verdict::Kind::Suspicious &&
                           it->second.reason == Verdict::Reason::Break;
                });
            case Action::Type::FacadeMbr:
                return scans_after([&](const ScanSnapshot& s) {
                    return s.mbr == MbrStatus::FacadeDetected;
                });
            case Action::Type::InstallRootkit:
                return scans_after([&](const ScanSnapshot& s) {
                           return s.rootkits.contains(record.target_id) ||
                                  verdict_is(s, Verdict::Kind::Infected);
                       }) ||
                       opinions_after([&](const OpinionSnapshot& o) {
                           return o.rootkits.contains(record.target_id) ||
                                  verdict_is(o, Verdict::Kind::Infected);
                       });
            case Action::Type::PlantMalformed:
                return scans_after([&](const ScanSnapshot& s) {
                    const auto it = s.verdicts.find(record.target_id);
                    return it != s.verdicts.end() &&
                           it->second.kind == Verdict::Kind::Suspicious &&
                           it->second.reason == Verdict::Reason::FormatError;
                });
            default:
                return false;
        }
    }

    RunOutcome assemble() {
        json attacks = json::array();
        std::uint64_t detections = 0;
        std::uint64_t misses = 0;
        bool expectations_met = true;
        for (const AttackRecord& record : attack_log_) {
            const bool is_recon = record.type == Action::Type::SnapshotKnowledge;
            const bool defeated = judged_defeated(record);
            json out;
            out["tick"] = record.tick;
            out["type"] = attack_short_name(record.type);
            if (!record.target.empty()) out["target"] = record.target;
            out["outcome"] = is_recon ? "succeeded" : (defeated ? "defeated" : "succeeded");
            if (!record.note.empty()) out["note"] = record.note;
            if (record.expect_defeated) {
                out["expected"] = *record.expect_defeated ? "defeated" : "succeeded";
                const bool actual = is_recon ? false : defeated;
                if (actual != *record.expect_defeated) expectations_met = false;
            }
            if (!is_recon) {
                if (defeated) {
                    ++detections;
                } else {
                    ++misses;
                }
            }
            attacks.push_back(std::move(out));
        }

        json metrics;
        metrics["attacks"] = std::move(attacks);
        metrics["scans"] = std::move(scans_);
        metrics["second_opinions"] = std::move(opinions_);
        metrics["events"] = std::move(events_);
        metrics["summary"] = {{"attacks", attack_log_.size()},
                              {"detections", detections},
                              {"misses", misses},
                              {"false_assurances", false_assurances_},
                              {"total_bytes", total_bytes_},
                              {"expectations_met", expectations_met}};
        return {std::move(metrics), expectations_met};
    }

    const Scenario& scenario_;
    SplitMix64 rng_;
    VirtualDisk disk_;
    FileStore fs_;
    AlgorithmCatalog catalog_;
    BudgetPolicy policy_;
    TrustedStore store_;
    std::optional<EngineInstance> engine_;
    ScanFlags flags_;
    std::map<std::string, FileId> ids_;
    std::map<FileId, Bytes> pre_infection_;
    std::optional<AttackKnowledge> knowledge_;
    std::vector<ScanSnapshot> scan_log_;
    std::vector<OpinionSnapshot> opinion_log_;
    std::vector<AttackRecord> attack_log_;
    json scans_ = json::array();
    json opinions_ = json::array();
    json events_ = json::array();
    std::uint64_t total_bytes_ = 0;
    std::uint64_t false_assurances_ = 0;
    std::uint64_t last_tick_ = 0;
};

}  // namespace

RunOutcome run_scenario(const Scenario& scenario) {
    ScenarioRun run(scenario);
    return run.run();
}

std::string metrics_to_string(const json& metrics) { return metrics.dump(2) + "\n"; }

MatrixResult run_matrix() {
    struct Pair {
        const char* attack;
        const char* defense;
        const char* defended;
        const char* undefended;
    };
    static const Pair pairs[] = {
        {"state_flip", "sector_archive_bits", "stateflip.json", "stateflip_undefended.json"},
        {"sigdb_tamper", "sealed_databases", "sigdb_tamper.json", "sigdb_tamper_undefended.json"},
        {"integritydb_tamper", "sealed_databases", "integritydb_tamper.json",
         "integritydb_tamper_undefended.json"},
        {"decompression_bomb", "budget_meter", "bomb.json", "bomb_undefended.json"},
        {"rootkit_hiding", "raw_view_scanning", "rootkit.json", "rootkit_undefended.json"},
        {"exec_replace", "self_check", "exec_replace.json", "exec_replace_undefended.json"},
        {"locate_and_replace", "obfuscation_epochs", "obfuscation.json",
         "obfuscation_undefended.json"},
        {"subset_evasion", "second_opinion", "evasion.json", "evasion_undefended.json"},
        {"malformed_archive", "strict_format", "malformed.json", "malformed_undefended.json"},
        {"facade_mbr", "trusted_mbr_view", "facade_mbr.json", "facade_mbr_undefended.json"},
    };

    MatrixResult result;
    for (const Pair& pair : pairs) {
        MatrixRow row;
        row.attack = pair.attack;
        row.defense = pair.defense;
        row.defended_scenario = pair.defended;
        row.undefended_scenario = pair.undefended;
        for (const bool defended : {true, false}) {
            const char* name = defended ? pair.defended : pair.undefended;
            const BundledScenario* bundled = find_bundled_scenario(name);
            if (bundled == nullptr) throw Error(ErrorCode::Internal, "missing bundled scenario");
            ParseResult parsed = parse_scenario(bundled->text);
            if (!parsed.scenario) throw Error(ErrorCode::Internal, "bundled scenario invalid");
            const RunOutcome outcome = run_scenario(*parsed.scenario);
            if (defended) {
                row.defended_as_expected = outcome.expectations_met;
            } else {
                row.undefended_as_expected = outcome.expectations_met;
            }
        }
        if (!row.defended_as_expected || !row.undefended_as_expected) {
            result.all_as_expected = false;
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string matrix_table(const MatrixResult& result) {
    std::ostringstream out;
    const auto pad = [](std::string s, std::size_t width) {
        if (s.size() < width) s.append(width - s.size(), ' ');
        return s;
    };
    out << pad("attack", 20) << pad("defense", 22) << pad("defended", 12) << "undefended\n";
    for (const MatrixRow& row : result.rows) {
        out << pad(row.attack, 20) << pad(row.defense, 22)
            << pad(row.defended_as_expected ? "detected" : "MISSED", 12)
            << (row.undefended_as_expected ? "missed" : "DETECTED") << "\n";
    }
    out << (result.all_as_expected ? "all pairs behaved as expected\n"
                                   : "unexpected outcomes present\n");
    return out.str();
}

FuzzResult run_fuzz(std::uint64_t seed, std::uint32_t count) {
    SplitMix64 rng(seed);
    FuzzResult result;
    result.count = count;

    VirtualDisk disk(65536, 512);
    FileStore fs(disk);
    const std::vector<FuzzFile> corpus = fuzz_generate(rng, count);
    std::vector<FileId> ids;
    ids.reserve(corpus.size());
    for (const FuzzFile& file : corpus) {
        ids.push_back(fs.create_file(file.name, file.kind, file.content));
    }
    TrustedStore store;
    AlgorithmCatalog catalog;
    BudgetPolicy policy;
    EngineInstance engine =
        EngineInstance::install(catalog, rng.next(), 3, policy, store, fs);
    const ScanReport report = engine.full_scan(1, {});
    result.total_bytes = report.bytes_consumed;
    for (const FileScanRecord& record : report.files) {
        if (fs.entry(record.id).kind == FileKind::AvComponent) continue;
        if (record.verdict.kind == Verdict::Kind::Clean) {
            ++result.clean;
        } else if (record.verdict.kind == Verdict::Kind::Infected) {
            ++result.infected;
        } else if (record.verdict.reason == Verdict::Reason::Break) {
            ++result.suspicious_break;
        } else if (record.verdict.reason == Verdict::Reason::FormatError) {
            ++result.suspicious_format;
        } else {
            ++result.suspicious_other;
        }
        const std::uint64_t bound =
            threshold_bytes(policy, fs.entry(record.id).length) + kRleMaxRunLength;
        if (record.bytes > bound) result.bounded = false;
    }
    return result;
}

json fuzz_to_json(const FuzzResult& result) {
    return {{"count", result.count},
            {"clean", result.clean},
            {"infected", result.infected},
            {"suspicious_break", result.suspicious_break},
            {"suspicious_format", result.suspicious_format},
            {"suspicious_other", result.suspicious_other},
            {"total_bytes", result.total_bytes},
            {"bounded", result.bounded}};
}

}  // namespace avb
