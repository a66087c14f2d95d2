/* C interface to the pick-and-drop simulator.
 *
 * Every object is an opaque handle released with its *_free function.
 * Functions return a pd_status; on failure pd_last_error() describes the
 * cause for the calling thread. Strings returned through char** outputs are
 * owned by the caller and released with pd_string_free. */
#ifndef PICKDROP_H
#define PICKDROP_H

#include <stddef.h>
#include <stdint.h>

#if defined(PICKDROP_BUILDING_LIBRARY)
#define PD_API __attribute__((visibility("default")))
#else
#define PD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pd_status {
  PD_OK = 0,
  PD_INVALID_ARGUMENT = 1,
  PD_PARSE_ERROR = 2,
  PD_IO_ERROR = 3,
  PD_GENERATION_ERROR = 4,
  PD_RUNTIME_ERROR = 5
} pd_status;

typedef struct pd_template pd_template;
typedef struct pd_scenario pd_scenario;
typedef struct pd_records pd_records;
typedef struct pd_report pd_report;

PD_API const char* pd_version(void);
PD_API const char* pd_last_error(void);
PD_API const char* pd_status_string(pd_status status);
PD_API void pd_string_free(char* text);

/* Scenario templates. */
PD_API pd_status pd_template_default(pd_template** out);
PD_API pd_status pd_template_parse(const char* json, pd_template** out);
PD_API pd_status pd_template_load(const char* path, pd_template** out);
PD_API pd_status pd_template_dump(const pd_template* tpl, char** out);
/* mode: "collect-all" or "one-by-one". */
PD_API pd_status pd_template_set_mode(pd_template* tpl, const char* mode);
/* profile: "none" or "field"; sets sensing noise and execution failures. */
PD_API pd_status pd_template_set_profile(pd_template* tpl, const char* profile);
PD_API pd_status pd_template_set_object_count(pd_template* tpl, int count);
PD_API void pd_template_free(pd_template* tpl);

/* Scenarios. */
PD_API pd_status pd_scenario_generate(const pd_template* tpl, uint64_t seed, pd_scenario** out);
PD_API pd_status pd_scenario_parse(const char* json, pd_scenario** out);
PD_API pd_status pd_scenario_load(const char* path, pd_scenario** out);
PD_API pd_status pd_scenario_dump(const pd_scenario* scenario, char** out);
PD_API pd_status pd_scenario_save(const pd_scenario* scenario, const char* path);
PD_API pd_status pd_scenario_set_profile(pd_scenario* scenario, const char* profile);
PD_API pd_status pd_scenario_set_seed(pd_scenario* scenario, uint64_t seed);
PD_API const char* pd_scenario_name(const pd_scenario* scenario);
PD_API size_t pd_scenario_object_count(const pd_scenario* scenario);
PD_API void pd_scenario_free(pd_scenario* scenario);

/* Batch execution. Zeroed fields select defaults. */
typedef struct pd_batch_options {
  const char* mode;        /* NULL keeps each scenario's own mode */
  const char* set;         /* NULL means "default" */
  int parallelism;         /* worker threads, <= 0 means 1 */
  double density;          /* render samples per m^2, <= 0 means 20000 */
  int drop_trajectories;   /* nonzero omits trajectories from records */
} pd_batch_options;

PD_API pd_status pd_run_batch(const pd_scenario* const* scenarios, size_t count,
                              const pd_batch_options* options, pd_records** out);
/* Runs one trial and returns its event log as line-delimited JSON. */
PD_API pd_status pd_run_event_log(const pd_scenario* scenario, const pd_batch_options* options,
                                  char** out);

/* Trial records. */
PD_API pd_status pd_records_create(pd_records** out);
PD_API pd_status pd_records_load(const char* path, pd_records** out);
PD_API pd_status pd_records_save(const pd_records* records, const char* path);
PD_API pd_status pd_records_append(pd_records* dst, const pd_records* src);
PD_API size_t pd_records_count(const pd_records* records);
PD_API size_t pd_records_task_successes(const pd_records* records);
/* One record as a single JSON line. */
PD_API pd_status pd_records_get_json(const pd_records* records, size_t index, char** out);
PD_API void pd_records_free(pd_records* records);

/* Reports. */
PD_API pd_status pd_aggregate(const pd_records* records, pd_report** out);
PD_API pd_status pd_report_summary(const pd_report* report, char** out);
PD_API pd_status pd_report_metrics_csv(const pd_report* report, char** out);
/* formats: comma-separated subset of "csv,txt,svg". Scenarios, if given,
 * supply the occupancy grids drawn under the map plots. */
PD_API pd_status pd_report_emit(const pd_report* report, const char* formats, const char* dir,
                                const pd_scenario* const* scenarios, size_t scenario_count);
PD_API void pd_report_free(pd_report* report);

#ifdef __cplusplus
}
#endif

#endif /* PICKDROP_H */
