// Command line front end; talks to the library only through avbastion.h.
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <avbastion.h>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitExpectationFailed = 1;
constexpr int kExitSchemaError = 2;
constexpr int kExitInternalError = 3;

struct OwnedString {
    char* value = nullptr;
    ~OwnedString() { avb_string_free(value); }
    char** slot() { return &value; }
    const char* c_str() const { return value == nullptr ? "" : value; }
};

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::optional<std::uint64_t> parse_seed(const std::string& text) {
    if (text.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    unsigned long long value = std::strtoull(text.c_str(), &end, 10);
    if (errno != 0 || end == nullptr || *end != '\0') return std::nullopt;
    return static_cast<std::uint64_t>(value);
}

// Seed precedence: --seed flag, then AVB_SEED, then the scenario's own seed.
int apply_seed_override(avb_scenario* scenario, const std::optional<std::uint64_t>& flag_seed) {
    if (flag_seed.has_value()) {
        avb_scenario_set_seed(scenario, *flag_seed);
        return kExitOk;
    }
    const char* env = std::getenv("AVB_SEED");
    if (env == nullptr) return kExitOk;
    auto parsed = parse_seed(env);
    if (!parsed.has_value()) {
        std::cerr << "error: AVB_SEED is not an unsigned integer: " << env << "\n";
        return kExitSchemaError;
    }
    avb_scenario_set_seed(scenario, *parsed);
    return kExitOk;
}

int load_scenario(const std::string& path, avb_scenario** out) {
    auto text = read_file(path);
    if (!text.has_value()) {
        std::cerr << "error: cannot read scenario file: " << path << "\n";
        return kExitSchemaError;
    }
    OwnedString errors;
    avb_status status = avb_scenario_parse(text->c_str(), out, errors.slot());
    if (status == AVB_SCHEMA_ERROR) {
        std::cerr << "error: scenario rejected:\n" << errors.c_str();
        return kExitSchemaError;
    }
    if (status != AVB_OK) {
        std::cerr << "error: " << errors.c_str() << "\n";
        return kExitInternalError;
    }
    return kExitOk;
}

int cmd_run(const std::string& path, const std::optional<std::uint64_t>& seed,
            const std::string& out_path) {
    avb_scenario* scenario = nullptr;
    if (int rc = load_scenario(path, &scenario); rc != kExitOk) return rc;
    if (int rc = apply_seed_override(scenario, seed); rc != kExitOk) {
        avb_scenario_free(scenario);
        return rc;
    }
    avb_report* report = nullptr;
    OwnedString error;
    avb_status status = avb_scenario_run(scenario, &report, error.slot());
    avb_scenario_free(scenario);
    if (status != AVB_OK) {
        std::cerr << "error: " << error.c_str() << "\n";
        return kExitInternalError;
    }
    const char* metrics = avb_report_metrics_json(report);
    if (out_path.empty()) {
        std::cout << metrics;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << out_path << "\n";
            avb_report_free(report);
            return kExitInternalError;
        }
        out << metrics;
    }
    const bool met = avb_report_expectations_met(report) != 0;
    avb_report_free(report);
    if (!met) {
        std::cerr << "expectations not met\n";
        return kExitExpectationFailed;
    }
    return kExitOk;
}

int cmd_validate(const std::string& path) {
    avb_scenario* scenario = nullptr;
    if (int rc = load_scenario(path, &scenario); rc != kExitOk) return rc;
    avb_scenario_free(scenario);
    std::cout << "ok\n";
    return kExitOk;
}

int cmd_matrix() {
    OwnedString table;
    OwnedString error;
    int all_as_expected = 0;
    avb_status status = avb_matrix_run(table.slot(), &all_as_expected, error.slot());
    if (status != AVB_OK) {
        std::cerr << "error: " << error.c_str() << "\n";
        return kExitInternalError;
    }
    std::cout << table.c_str();
    return all_as_expected != 0 ? kExitOk : kExitExpectationFailed;
}

int cmd_fuzz(std::uint64_t seed, std::uint32_t count) {
    OwnedString summary;
    OwnedString error;
    int bounded = 0;
    avb_status status = avb_fuzz_run(seed, count, summary.slot(), &bounded, error.slot());
    if (status != AVB_OK) {
        std::cerr << "error: " << error.c_str() << "\n";
        return kExitInternalError;
    }
    std::cout << summary.c_str();
    return bounded != 0 ? kExitOk : kExitExpectationFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"av-bastion: deterministic anti-virus self-protection testbed"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_path;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;

    CLI::App* run = app.add_subcommand("run", "run a scenario and print JSON metrics");
    run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--seed", seed_flag, "override the scenario seed")
        ->each([&](const std::string&) { seed_given = true; });
    run->add_option("--out", out_path, "write metrics to a file instead of stdout");

    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "check a scenario against the schema");
    validate->add_option("--scenario", validate_path, "scenario JSON file")->required();

    CLI::App* matrix =
        app.add_subcommand("matrix", "run every bundled attack with its defense on and off");
    (void)matrix;

    std::uint64_t fuzz_seed = 1;
    std::uint32_t fuzz_count = 10000;
    CLI::App* fuzz = app.add_subcommand("fuzz", "scan generated hostile files");
    fuzz->add_option("--seed", fuzz_seed, "fuzz corpus seed");
    fuzz->add_option("--count", fuzz_count, "number of files to generate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitSchemaError;
    }

    try {
        if (run->parsed()) {
            std::optional<std::uint64_t> seed;
            if (seed_given) seed = seed_flag;
            return cmd_run(scenario_path, seed, out_path);
        }
        if (validate->parsed()) return cmd_validate(validate_path);
        if (matrix->parsed()) return cmd_matrix();
        if (fuzz->parsed()) return cmd_fuzz(fuzz_seed, fuzz_count);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternalError;
    }
    return kExitSchemaError;
}
