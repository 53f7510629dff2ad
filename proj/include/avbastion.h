/* C API for the av-bastion adversarial testbed.
 *
 * All functions are deterministic: the same inputs produce byte-identical
 * outputs. Strings returned through char** out-parameters are heap-allocated
 * and must be released with avb_string_free(); strings returned as
 * const char* are owned by the object (or static) and must not be freed.
 */
#ifndef AVBASTION_H
#define AVBASTION_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avb_status {
    AVB_OK = 0,
    AVB_SCHEMA_ERROR = 1,  /* scenario text rejected by the validator */
    AVB_RUNTIME_ERROR = 2  /* execution failed; see error message */
} avb_status;

typedef struct avb_scenario avb_scenario;
typedef struct avb_report avb_report;

/* Parses and validates scenario JSON. On AVB_SCHEMA_ERROR, *errors_json
 * (if non-NULL) receives a JSON array of {path, message} objects. */
avb_status avb_scenario_parse(const char* json_text, avb_scenario** out,
                              char** errors_json);
void avb_scenario_free(avb_scenario* scenario);

/* Overrides the scenario's embedded seed before running. */
void avb_scenario_set_seed(avb_scenario* scenario, uint64_t seed);
uint64_t avb_scenario_seed(const avb_scenario* scenario);

/* Runs the timeline. On AVB_RUNTIME_ERROR, *error_message (if non-NULL)
 * receives a description. */
avb_status avb_scenario_run(const avb_scenario* scenario, avb_report** out,
                            char** error_message);
void avb_report_free(avb_report* report);

/* JSON metrics document; owned by the report. */
const char* avb_report_metrics_json(const avb_report* report);
/* 1 if every "expect" tag in the scenario matched the outcome, else 0. */
int avb_report_expectations_met(const avb_report* report);

/* Scenarios compiled into the library. */
size_t avb_bundled_count(void);
const char* avb_bundled_name(size_t index);  /* NULL if out of range */
const char* avb_bundled_text(size_t index);  /* NULL if out of range */

/* Runs the full attack-vs-defense matrix over the bundled scenarios.
 * *table_text receives a rendered table; *all_as_expected gets 0/1. */
avb_status avb_matrix_run(char** table_text, int* all_as_expected,
                          char** error_message);

/* Scans `count` generated files (valid, malformed, and random) and reports
 * verdict tallies as JSON. *bounded gets 1 if every scan stayed within its
 * byte budget. */
avb_status avb_fuzz_run(uint64_t seed, uint32_t count, char** summary_json,
                        int* bounded, char** error_message);

void avb_string_free(char* text);
const char* avb_version(void);

#ifdef __cplusplus
}
#endif

#endif /* AVBASTION_H */
