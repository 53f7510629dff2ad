#include "avb/scenario.hpp"

#include <map>
#include <json.hpp>

namespace avb {

using nlohmann::json;

bool action_is_attack(Action::Type type) {
    switch (type) {
        case Action::Type::Infect:
        case Action::Type::FlipState:
        case Action::Type::TamperDb:
        case Action::Type::SnapshotKnowledge:
        case Action::Type::ReplaceAv:
        case Action::Type::PlantBomb:
        case Action::Type::FacadeMbr:
        case Action::Type::InstallRootkit:
        case Action::Type::PlantMalformed:
            return true;
        default:
            return false;
    }
}

const char* action_type_name(Action::Type type) {
    switch (type) {
        case Action::Type::ScanFull: return "scan.full";
        case Action::Type::ScanIncremental: return "scan.incremental";
        case Action::Type::Epoch: return "epoch";
        case Action::Type::SecondOpinion: return "second_opinion";
        case Action::Type::RepairMbr: return "repair_mbr";
        case Action::Type::Write: return "write";
        case Action::Type::Infect: return "attack.infect";
        case Action::Type::FlipState: return "attack.flip_state";
        case Action::Type::TamperDb: return "attack.tamper_db";
        case Action::Type::SnapshotKnowledge: return "attack.snapshot_knowledge";
        case Action::Type::ReplaceAv: return "attack.replace_av";
        case Action::Type::PlantBomb: return "attack.plant_bomb";
        case Action::Type::FacadeMbr: return "attack.facade_mbr";
        case Action::Type::InstallRootkit: return "attack.install_rootkit";
        case Action::Type::PlantMalformed: return "attack.plant_malformed";
    }
    return "unknown";
}

namespace {

const std::map<std::string, Action::Type>& action_names() {
    static const std::map<std::string, Action::Type> names = {
        {"scan.full", Action::Type::ScanFull},
        {"scan.incremental", Action::Type::ScanIncremental},
        {"epoch", Action::Type::Epoch},
        {"second_opinion", Action::Type::SecondOpinion},
        {"repair_mbr", Action::Type::RepairMbr},
        {"write", Action::Type::Write},
        {"attack.infect", Action::Type::Infect},
        {"attack.flip_state", Action::Type::FlipState},
        {"attack.tamper_db", Action::Type::TamperDb},
        {"attack.snapshot_knowledge", Action::Type::SnapshotKnowledge},
        {"attack.replace_av", Action::Type::ReplaceAv},
        {"attack.plant_bomb", Action::Type::PlantBomb},
        {"attack.facade_mbr", Action::Type::FacadeMbr},
        {"attack.install_rootkit", Action::Type::InstallRootkit},
        {"attack.plant_malformed", Action::Type::PlantMalformed},
    };
    return names;
}

bool reserved_name(const std::string& name) {
    return name == "avcore.bin" || name == "avsig.db" || name == "avint.db" ||
           name == "avstate.db";
}

class Validator {
public:
    ParseResult run(std::string_view text) {
        json root = json::parse(text, nullptr, false);
        if (root.is_discarded()) {
            fail("/", "not valid JSON");
            return finish();
        }
        if (!root.is_object()) {
            fail("/", "top level must be an object");
            return finish();
        }
        check_keys(root, "/",
                   {"seed", "disk", "catalog", "install", "budget", "flags", "obfuscation",
                    "files", "timeline"});

        read_u64(root, "", "seed", scenario_.seed);
        if (const json* disk = section(root, "disk", {"sectors", "sector_size"})) {
            read_u32(*disk, "/disk", "sectors", scenario_.disk_sectors);
            read_u32(*disk, "/disk", "sector_size", scenario_.disk_sector_size);
        }
        if (const json* catalog = section(root, "catalog", {"algorithms", "families"})) {
            read_u32(*catalog, "/catalog", "algorithms", scenario_.catalog_algorithms);
            read_u32(*catalog, "/catalog", "families", scenario_.catalog_families);
        }
        if (const json* install = section(root, "install", {"k"})) {
            read_u32(*install, "/install", "k", scenario_.install_k);
        }
        if (const json* budget = section(root, "budget", {"b0", "alpha"})) {
            read_u64(*budget, "/budget", "b0", scenario_.budget_b0);
            read_u64(*budget, "/budget", "alpha", scenario_.budget_alpha);
        }
        if (const json* flags = section(root, "flags",
                                        {"trust_state_db", "skip_self_check", "no_rootkit_sweep",
                                         "no_budget", "no_seal_checks", "no_trusted_mbr",
                                         "lenient_format"})) {
            read_bool(*flags, "/flags", "trust_state_db", scenario_.flags.trust_state_db);
            read_bool(*flags, "/flags", "skip_self_check", scenario_.flags.skip_self_check);
            read_bool(*flags, "/flags", "no_rootkit_sweep", scenario_.flags.no_rootkit_sweep);
            read_bool(*flags, "/flags", "no_budget", scenario_.flags.no_budget);
            read_bool(*flags, "/flags", "no_seal_checks", scenario_.flags.no_seal_checks);
            read_bool(*flags, "/flags", "no_trusted_mbr", scenario_.flags.no_trusted_mbr);
            read_bool(*flags, "/flags", "lenient_format", scenario_.flags.lenient_format);
        }
        if (const json* obf = section(root, "obfuscation", {"period"})) {
            read_u64(*obf, "/obfuscation", "period", scenario_.obfuscation_period);
        }

        validate_limits();
        validate_files(root);
        validate_timeline(root);
        return finish();
    }

private:
    void fail(std::string path, std::string message) {
        errors_.push_back({std::move(path), std::move(message)});
    }

    ParseResult finish() {
        ParseResult result;
        result.errors = std::move(errors_);
        if (result.errors.empty()) result.scenario = std::move(scenario_);
        return result;
    }

    void check_keys(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
        for (const auto& [key, _] : obj.items()) {
            if (!allowed.contains(key)) fail(path + key, "unknown key");
        }
    }

    const json* section(const json& root, const char* key, const std::set<std::string>& allowed) {
        if (!root.contains(key)) return nullptr;
        const json& value = root.at(key);
        if (!value.is_object()) {
            fail(std::string("/") + key, "must be an object");
            return nullptr;
        }
        check_keys(value, std::string("/") + key + "/", allowed);
        return &value;
    }

    bool read_u64(const json& obj, const std::string& path, const char* key,
                  std::uint64_t& out) {
        if (!obj.contains(key)) return false;
        const json& value = obj.at(key);
        if (!value.is_number_unsigned()) {
            fail(path + "/" + key, "must be an unsigned integer");
            return false;
        }
        out = value.get<std::uint64_t>();
        return true;
    }

    bool read_u32(const json& obj, const std::string& path, const char* key,
                  std::uint32_t& out) {
        std::uint64_t wide = out;
        if (!read_u64(obj, path, key, wide)) return false;
        if (wide > 0xffffffffull) {
            fail(path + "/" + key, "too large");
            return false;
        }
        out = static_cast<std::uint32_t>(wide);
        return true;
    }

    void read_bool(const json& obj, const std::string& path, const char* key, bool& out) {
        if (!obj.contains(key)) return;
        const json& value = obj.at(key);
        if (!value.is_boolean()) {
            fail(path + "/" + key, "must be a boolean");
            return;
        }
        out = value.get<bool>();
    }

    void validate_limits() {
        if (scenario_.disk_sectors < 8) fail("/disk/sectors", "must be at least 8");
        if (scenario_.disk_sector_size < 64) fail("/disk/sector_size", "must be at least 64");
        if (scenario_.disk_sector_size > (1u << 20)) fail("/disk/sector_size", "too large");
        if (scenario_.catalog_algorithms < 1 || scenario_.catalog_algorithms > 64) {
            fail("/catalog/algorithms", "must be between 1 and 64");
        }
        if (scenario_.catalog_families < 1 || scenario_.catalog_families > 256) {
            fail("/catalog/families", "must be between 1 and 256");
        }
        if (scenario_.install_k < 1 || scenario_.install_k > scenario_.catalog_algorithms) {
            fail("/install/k", "must be between 1 and catalog.algorithms");
        }
        if (scenario_.budget_b0 < 1) fail("/budget/b0", "must be at least 1");
    }

    void validate_files(const json& root) {
        if (!root.contains("files")) return;
        const json& files = root.at("files");
        if (!files.is_array()) {
            fail("/files", "must be an array");
            return;
        }
        std::size_t index = 0;
        for (const json& item : files) {
            const std::string path = "/files/" + std::to_string(index++);
            if (!item.is_object()) {
                fail(path, "must be an object");
                continue;
            }
            check_keys(item, path + "/", {"name", "kind", "size"});
            ScenarioFile file;
            if (!item.contains("name") || !item.at("name").is_string() ||
                item.at("name").get<std::string>().empty()) {
                fail(path + "/name", "must be a non-empty string");
                continue;
            }
            file.name = item.at("name").get<std::string>();
            if (file_names_.contains(file.name)) {
                fail(path + "/name", "duplicate file name");
                continue;
            }
            if (reserved_name(file.name)) {
                fail(path + "/name", "name is reserved for an AV component");
                continue;
            }
            file.kind = "data";
            if (item.contains("kind")) {
                if (!item.at("kind").is_string()) {
                    fail(path + "/kind", "must be a string");
                } else {
                    file.kind = item.at("kind").get<std::string>();
                    if (file.kind != "data" && file.kind != "executable" &&
                        file.kind != "archive") {
                        fail(path + "/kind", "must be one of data, executable, archive");
                    }
                }
            }
            read_u64(item, path, "size", file.size);
            if (file.size > (256ull << 20)) fail(path + "/size", "too large");
            file_names_.insert(file.name);
            scenario_.files.push_back(std::move(file));
        }
    }

    void validate_timeline(const json& root) {
        if (!root.contains("timeline")) return;
        const json& timeline = root.at("timeline");
        if (!timeline.is_array()) {
            fail("/timeline", "must be an array");
            return;
        }
        std::uint64_t last_tick = 0;
        std::set<std::string> known_files = file_names_;
        std::set<std::string> infected;
        bool have_snapshot = false;
        std::size_t index = 0;
        for (const json& item : timeline) {
            const std::string path = "/timeline/" + std::to_string(index++);
            if (!item.is_object()) {
                fail(path, "must be an object");
                continue;
            }
            if (!item.contains("action") || !item.at("action").is_string()) {
                fail(path + "/action", "missing or not a string");
                continue;
            }
            const std::string action_name = item.at("action").get<std::string>();
            const auto type_it = action_names().find(action_name);
            if (type_it == action_names().end()) {
                fail(path + "/action", "unknown action '" + action_name + "'");
                continue;
            }
            Action action;
            action.type = type_it->second;
            if (!item.contains("tick") || !item.at("tick").is_number_unsigned()) {
                fail(path + "/tick", "missing or not an unsigned integer");
                continue;
            }
            action.tick = item.at("tick").get<std::uint64_t>();
            if (action.tick < 1 || action.tick <= last_tick) {
                fail(path + "/tick", "ticks must be strictly increasing and start at 1");
            }
            last_tick = std::max(last_tick, action.tick);

            std::set<std::string> allowed = {"action", "tick"};
            if (action_is_attack(action.type)) allowed.insert("expect");
            const auto need_target = [&](bool must_exist) {
                allowed.insert("target");
                if (!item.contains("target") || !item.at("target").is_string()) {
                    fail(path + "/target", "missing or not a string");
                    return false;
                }
                action.target = item.at("target").get<std::string>();
                if (must_exist && !known_files.contains(action.target)) {
                    fail(path + "/target", "references undefined file '" + action.target + "'");
                    return false;
                }
                return true;
            };

            switch (action.type) {
                case Action::Type::ScanFull:
                case Action::Type::ScanIncremental:
                case Action::Type::Epoch:
                case Action::Type::SecondOpinion:
                case Action::Type::RepairMbr:
                case Action::Type::FacadeMbr:
                case Action::Type::SnapshotKnowledge:
                    if (action.type == Action::Type::SnapshotKnowledge) have_snapshot = true;
                    break;
                case Action::Type::Write: {
                    allowed.insert("size");
                    need_target(true);
                    if (item.contains("size")) {
                        std::uint64_t size = 0;
                        if (read_u64(item, path, "size", size)) action.size = size;
                    }
                    break;
                }
                case Action::Type::Infect: {
                    allowed.insert("family");
                    allowed.insert("evades");
                    if (need_target(true)) infected.insert(action.target);
                    read_u32(item, path, "family", action.family);
                    if (action.family >= scenario_.catalog_families) {
                        fail(path + "/family", "family out of range");
                    }
                    if (item.contains("evades")) {
                        const json& evades = item.at("evades");
                        if (evades.is_string() && evades.get<std::string>() == "installed") {
                            action.evades = std::nullopt;
                        } else if (evades.is_array()) {
                            std::set<std::uint32_t> ids;
                            for (const json& e : evades) {
                                if (!e.is_number_unsigned() ||
                                    e.get<std::uint64_t>() >= scenario_.catalog_algorithms) {
                                    fail(path + "/evades", "algorithm id out of range");
                                    continue;
                                }
                                ids.insert(e.get<std::uint32_t>());
                            }
                            action.evades = std::move(ids);
                        } else {
                            fail(path + "/evades", "must be an array or \"installed\"");
                        }
                    } else {
                        action.evades = std::set<std::uint32_t>{};
                    }
                    break;
                }
                case Action::Type::FlipState:
                    need_target(true);
                    break;
                case Action::Type::TamperDb: {
                    allowed.insert("db");
                    if (!item.contains("db") || !item.at("db").is_string()) {
                        fail(path + "/db", "missing or not a string");
                        break;
                    }
                    action.db = item.at("db").get<std::string>();
                    if (action.db != "signature" && action.db != "integrity") {
                        fail(path + "/db", "must be \"signature\" or \"integrity\"");
                    }
                    break;
                }
                case Action::Type::ReplaceAv:
                    if (!have_snapshot) {
                        fail(path, "attack.replace_av needs an earlier attack.snapshot_knowledge");
                    }
                    break;
                case Action::Type::PlantBomb: {
                    allowed.insert("runs");
                    allowed.insert("value");
                    allowed.insert("name");
                    read_u32(item, path, "runs", action.runs);
                    if (action.runs < 1) fail(path + "/runs", "must be at least 1");
                    std::uint32_t value = 0;
                    if (read_u32(item, path, "value", value)) {
                        if (value > 255) fail(path + "/value", "must fit in a byte");
                        action.value = static_cast<std::uint8_t>(value);
                    }
                    if (!item.contains("name") || !item.at("name").is_string() ||
                        item.at("name").get<std::string>().empty()) {
                        fail(path + "/name", "missing or empty");
                        break;
                    }
                    action.name = item.at("name").get<std::string>();
                    if (known_files.contains(action.name) || reserved_name(action.name)) {
                        fail(path + "/name", "duplicate or reserved file name");
                    }
                    known_files.insert(action.name);
                    break;
                }
                case Action::Type::PlantMalformed: {
                    allowed.insert("name");
                    allowed.insert("variant");
                    if (!item.contains("name") || !item.at("name").is_string() ||
                        item.at("name").get<std::string>().empty()) {
                        fail(path + "/name", "missing or empty");
                        break;
                    }
                    action.name = item.at("name").get<std::string>();
                    if (known_files.contains(action.name) || reserved_name(action.name)) {
                        fail(path + "/name", "duplicate or reserved file name");
                    }
                    known_files.insert(action.name);
                    action.variant = "bad_magic";
                    if (item.contains("variant")) {
                        if (!item.at("variant").is_string()) {
                            fail(path + "/variant", "must be a string");
                        } else {
                            action.variant = item.at("variant").get<std::string>();
                            if (action.variant != "bad_magic" && action.variant != "zero_count" &&
                                action.variant != "length_lie" && action.variant != "truncated") {
                                fail(path + "/variant", "unknown variant");
                            }
                        }
                    }
                    break;
                }
                case Action::Type::InstallRootkit:
                    if (need_target(true) && !infected.contains(action.target)) {
                        fail(path + "/target", "rootkit needs an earlier infection of the target");
                    }
                    break;
            }

            if (item.contains("expect")) {
                if (!action_is_attack(action.type)) {
                    fail(path + "/expect", "only attack actions take an expectation");
                } else if (!item.at("expect").is_string()) {
                    fail(path + "/expect", "must be a string");
                } else {
                    const std::string expect = item.at("expect").get<std::string>();
                    if (expect == "defeated") {
                        action.expect_defeated = true;
                    } else if (expect == "succeeded") {
                        action.expect_defeated = false;
                    } else {
                        fail(path + "/expect", "must be \"defeated\" or \"succeeded\"");
                    }
                }
            }
            check_keys(item, path + "/", allowed);
            scenario_.timeline.push_back(std::move(action));
        }
    }

    Scenario scenario_;
    std::vector<SchemaError> errors_;
    std::set<std::string> file_names_;
};

}  // namespace

ParseResult parse_scenario(std::string_view text) {
    Validator validator;
    return validator.run(text);
}

}  // namespace avb
