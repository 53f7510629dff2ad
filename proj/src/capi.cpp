#include "avbastion.h"

#include <cstring>
#include <new>
#include <string>

#include "avb/runner.hpp"
#include "avb/scenario.hpp"

struct avb_scenario {
    avb::Scenario scenario;
};

struct avb_report {
    std::string metrics;
    bool expectations_met = false;
};

namespace {

char* dup_string(const std::string& text) {
    char* out = new (std::nothrow) char[text.size() + 1];
    if (out == nullptr) return nullptr;
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

void set_out(char** slot, const std::string& text) {
    if (slot != nullptr) *slot = dup_string(text);
}

}  // namespace

extern "C" {

avb_status avb_scenario_parse(const char* json_text, avb_scenario** out,
                              char** errors_json) {
    if (out != nullptr) *out = nullptr;
    if (errors_json != nullptr) *errors_json = nullptr;
    if (json_text == nullptr || out == nullptr) return AVB_RUNTIME_ERROR;
    try {
        avb::ParseResult result = avb::parse_scenario(json_text);
        if (!result.scenario.has_value()) {
            nlohmann::json errors = nlohmann::json::array();
            for (const avb::SchemaError& e : result.errors) {
                errors.push_back({{"path", e.path}, {"message", e.message}});
            }
            set_out(errors_json, errors.dump(2) + "\n");
            return AVB_SCHEMA_ERROR;
        }
        *out = new avb_scenario{std::move(*result.scenario)};
        return AVB_OK;
    } catch (const std::exception& e) {
        set_out(errors_json, std::string("[{\"path\": \"/\", \"message\": \"") + e.what() +
                                 "\"}]\n");
        return AVB_RUNTIME_ERROR;
    }
}

void avb_scenario_free(avb_scenario* scenario) { delete scenario; }

void avb_scenario_set_seed(avb_scenario* scenario, uint64_t seed) {
    if (scenario != nullptr) scenario->scenario.seed = seed;
}

uint64_t avb_scenario_seed(const avb_scenario* scenario) {
    return scenario == nullptr ? 0 : scenario->scenario.seed;
}

avb_status avb_scenario_run(const avb_scenario* scenario, avb_report** out,
                            char** error_message) {
    if (out != nullptr) *out = nullptr;
    if (error_message != nullptr) *error_message = nullptr;
    if (scenario == nullptr || out == nullptr) return AVB_RUNTIME_ERROR;
    try {
        avb::RunOutcome outcome = avb::run_scenario(scenario->scenario);
        *out = new avb_report{avb::metrics_to_string(outcome.metrics),
                              outcome.expectations_met};
        return AVB_OK;
    } catch (const std::exception& e) {
        set_out(error_message, e.what());
        return AVB_RUNTIME_ERROR;
    }
}

void avb_report_free(avb_report* report) { delete report; }

const char* avb_report_metrics_json(const avb_report* report) {
    return report == nullptr ? nullptr : report->metrics.c_str();
}

int avb_report_expectations_met(const avb_report* report) {
    return (report != nullptr && report->expectations_met) ? 1 : 0;
}

size_t avb_bundled_count(void) { return avb::bundled_scenarios().size(); }

const char* avb_bundled_name(size_t index) {
    const auto& all = avb::bundled_scenarios();
    if (index >= all.size()) return nullptr;
    return all[index].name.data();
}

const char* avb_bundled_text(size_t index) {
    const auto& all = avb::bundled_scenarios();
    if (index >= all.size()) return nullptr;
    return all[index].text.data();
}

avb_status avb_matrix_run(char** table_text, int* all_as_expected,
                          char** error_message) {
    if (table_text != nullptr) *table_text = nullptr;
    if (all_as_expected != nullptr) *all_as_expected = 0;
    if (error_message != nullptr) *error_message = nullptr;
    try {
        avb::MatrixResult result = avb::run_matrix();
        if (table_text != nullptr) *table_text = dup_string(avb::matrix_table(result));
        if (all_as_expected != nullptr) *all_as_expected = result.all_as_expected ? 1 : 0;
        return AVB_OK;
    } catch (const std::exception& e) {
        set_out(error_message, e.what());
        return AVB_RUNTIME_ERROR;
    }
}

avb_status avb_fuzz_run(uint64_t seed, uint32_t count, char** summary_json,
                        int* bounded, char** error_message) {
    if (summary_json != nullptr) *summary_json = nullptr;
    if (bounded != nullptr) *bounded = 0;
    if (error_message != nullptr) *error_message = nullptr;
    try {
        avb::FuzzResult result = avb::run_fuzz(seed, count);
        if (summary_json != nullptr) {
            *summary_json = dup_string(avb::metrics_to_string(avb::fuzz_to_json(result)));
        }
        if (bounded != nullptr) *bounded = result.bounded ? 1 : 0;
        return AVB_OK;
    } catch (const std::exception& e) {
        set_out(error_message, e.what());
        return AVB_RUNTIME_ERROR;
    }
}

void avb_string_free(char* text) { delete[] text; }

const char* avb_version(void) { return "1.0.0"; }

}  // extern "C"
