#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "avb/scenario.hpp"

namespace avb {

struct RunOutcome {
    nlohmann::json metrics;
    bool expectations_met = true;
};

/// Executes the timeline on a world built from the scenario seed. Identical
/// scenarios produce byte-identical metrics.
RunOutcome run_scenario(const Scenario& scenario);

std::string metrics_to_string(const nlohmann::json& metrics);

struct BundledScenario {
    std::string_view name;
    std::string_view text;
};

const std::vector<BundledScenario>& bundled_scenarios();
const BundledScenario* find_bundled_scenario(std::string_view name);

struct MatrixRow {
    std::string attack;
    std::string defense;
    std::string defended_scenario;
    std::string undefended_scenario;
    bool defended_as_expected = false;
    bool undefended_as_expected = false;
};

struct MatrixResult {
    std::vector<MatrixRow> rows;
    bool all_as_expected = true;
};

/// Runs every bundled attack scenario twice: once with the paired defense
/// on, once with it ablated.
MatrixResult run_matrix();
std::string matrix_table(const MatrixResult& result);

struct FuzzResult {
    std::uint32_t count = 0;
    std::uint32_t clean = 0;
    std::uint32_t infected = 0;
    std::uint32_t suspicious_break = 0;
    std::uint32_t suspicious_format = 0;
    std::uint32_t suspicious_other = 0;
    std::uint64_t total_bytes = 0;
    /// Every scan ended with consumption within its meter bound.
    bool bounded = true;
};

FuzzResult run_fuzz(std::uint64_t seed, std::uint32_t count);
nlohmann::json fuzz_to_json(const FuzzResult& result);

}  // namespace avb
