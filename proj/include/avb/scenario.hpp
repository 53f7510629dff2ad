#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "avb/types.hpp"

namespace avb {

/// One timeline step. Targets reference files by name; attacks aimed at AV
/// components use the install-time names and simply fizzle when an
/// obfuscation epoch has renamed them away.
struct Action {
    enum class Type {
        ScanFull,
        ScanIncremental,
        Epoch,
        SecondOpinion,
        RepairMbr,
        Write,
        Infect,
        FlipState,
        TamperDb,
        SnapshotKnowledge,
        ReplaceAv,
        PlantBomb,
        FacadeMbr,
        InstallRootkit,
        PlantMalformed,
    };

    Type type = Type::ScanFull;
    std::uint64_t tick = 0;
    std::string target;
    std::uint32_t family = 0;
    /// nullopt means "evade exactly the installed set", resolved at run time.
    std::optional<std::set<std::uint32_t>> evades;
    std::string db;
    std::uint32_t runs = 0;
    std::uint8_t value = 0;
    std::string name;
    std::string variant;
    std::optional<std::uint64_t> size;
    std::optional<bool> expect_defeated;
};

bool action_is_attack(Action::Type type);
const char* action_type_name(Action::Type type);

struct ScenarioFile {
    std::string name;
    std::string kind;  // "data" | "executable" | "archive"
    std::uint64_t size = 0;
};

struct ScenarioFlags {
    bool trust_state_db = false;
    bool skip_self_check = false;
    bool no_rootkit_sweep = false;
    bool no_budget = false;
    bool no_seal_checks = false;
    bool no_trusted_mbr = false;
    bool lenient_format = false;
};

struct Scenario {
    std::uint64_t seed = 0;
    std::uint32_t disk_sectors = 1024;
    std::uint32_t disk_sector_size = 512;
    std::uint32_t catalog_algorithms = 8;
    std::uint32_t catalog_families = 4;
    std::uint32_t install_k = 3;
    std::uint64_t budget_b0 = 65536;
    std::uint64_t budget_alpha = 4;
    ScenarioFlags flags;
    std::uint64_t obfuscation_period = 0;
    std::vector<ScenarioFile> files;
    std::vector<Action> timeline;
};

struct SchemaError {
    std::string path;
    std::string message;
};

struct ParseResult {
    std::optional<Scenario> scenario;
    std::vector<SchemaError> errors;
};

ParseResult parse_scenario(std::string_view text);

}  // namespace avb
