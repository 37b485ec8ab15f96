// Copyright 2026 The pedwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the pedwatch library. Every call returns a pw_status; on
 * failure pw_last_error() describes it (per thread). Strings returned through
 * char** are heap-allocated and released with pw_string_free. */
#ifndef PEDWATCH_PEDWATCH_H_
#define PEDWATCH_PEDWATCH_H_

#include <stdint.h>

#if defined(PEDWATCH_BUILDING_LIBRARY)
#define PW_API __attribute__((visibility("default")))
#else
#define PW_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pw_status {
  PW_OK = 0,
  PW_ERR_INVALID_ARGUMENT = 1,
  PW_ERR_PARSE = 2,
  PW_ERR_IO = 3,
  PW_ERR_DUPLICATE_KEY = 4,
  PW_ERR_NOT_FOUND = 5,
  PW_ERR_CONFIG = 6,
  PW_ERR_UNAVAILABLE = 7,
  PW_ERR_STREAM_ORDER = 8,
  PW_ERR_INTERNAL = 9
} pw_status;

PW_API const char* pw_version(void);
PW_API const char* pw_last_error(void);
PW_API const char* pw_status_name(pw_status status);
PW_API void pw_string_free(char* s);

/* "trace", "debug", "info", "warn", "error", "critical" or "off". */
PW_API pw_status pw_set_log_level(const char* level);

/* RFC 3339 text or Unix seconds to Unix seconds. */
PW_API pw_status pw_parse_time(const char* text, double* out);

/* ---- primitives --------------------------------------------------------- */

typedef struct pw_motion {
  double x, y;   /* meters */
  double vx, vy; /* m/s */
} pw_motion;

typedef enum pw_severity { PW_SEVERITY_SERIOUS = 0, PW_SEVERITY_SLIGHT = 1, PW_SEVERITY_NONE = 2 } pw_severity;

/* *has_ttc is 0 when the pair is not closing. */
PW_API pw_status pw_compute_ttc(const pw_motion* ped, const pw_motion* veh, double radius, int* has_ttc,
                                double* ttc);
PW_API pw_status pw_classify_severity(double ttc, pw_severity* out);
PW_API pw_status pw_storage_ratio(double bitrate_bps, double duration_s, double report_bytes, double* out);

/* Renders the report sentence for a report record; "text" may be absent. */
PW_API pw_status pw_render_report(const char* record_json, char** text_out);

/* ---- report store ------------------------------------------------------- */

typedef struct pw_store pw_store;

PW_API pw_status pw_store_open(const char* dir, pw_store** out);
PW_API void pw_store_close(pw_store* store);
PW_API pw_status pw_store_append_json(pw_store* store, const char* record_json);
/* intersection may be NULL or "" for all. Results cover hour_start in [from, to). */
PW_API pw_status pw_store_query_json(pw_store* store, const char* intersection, double from, double to,
                                     char** json_out);
/* One report sentence per line. */
PW_API pw_status pw_store_query_text(pw_store* store, const char* intersection, double from, double to,
                                     char** text_out);
PW_API pw_status pw_store_stats_json(pw_store* store, const char* intersection, double from, double to,
                                     char** json_out);
/* {"answer", "provenance"}; the model comes from MODEL_ENDPOINT when use_model is set. */
PW_API pw_status pw_analyze(pw_store* store, const char* intersection, double from, double to,
                            const char* question, int use_model, char** json_out);

/* ---- pipeline and simulator -------------------------------------------- */

typedef enum pw_run_mode { PW_MODE_BATCH = 0, PW_MODE_REPLAY = 1, PW_MODE_LIVE = 2 } pw_run_mode;

typedef void (*pw_report_callback)(const char* record_json, void* user);

typedef struct pw_run_options {
  pw_run_mode mode;
  double replay_factor;       /* replay only; > 0 */
  int has_seed;
  uint64_t seed;
  double live_idle_timeout_s; /* live only; 0 tails until pw_request_stop */
  pw_report_callback on_report;
  void* user;
} pw_run_options;

PW_API void pw_run_options_init(pw_run_options* options);

/* Metrics JSON on success. */
PW_API pw_status pw_run_pipeline(const char* config_path, const pw_run_options* options, char** metrics_json);

/* Asks a running pipeline or service to wind down; async-signal-safe. */
PW_API void pw_request_stop(void);

/* Writes the scenario files into out_dir; summary JSON on success. */
PW_API pw_status pw_simulate(const char* scenario_path, const char* out_dir, int has_seed, uint64_t seed,
                             char** summary_json);

/* ---- HTTP service ------------------------------------------------------- */

typedef struct pw_service pw_service;

PW_API pw_status pw_service_create(const char* config_path, pw_service** out);
/* "host:port"; port 0 picks a free one, reported in *port_out. */
PW_API pw_status pw_service_bind(pw_service* service, const char* address, int* port_out);
/* Blocks until pw_service_stop or pw_request_stop. */
PW_API pw_status pw_service_listen(pw_service* service);
PW_API void pw_service_stop(pw_service* service);
PW_API void pw_service_destroy(pw_service* service);

#ifdef __cplusplus
}
#endif

#endif /* PEDWATCH_PEDWATCH_H_ */
