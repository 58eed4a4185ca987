/* C interface to the imputekit library.
 *
 * Every fallible call returns an ik_status. On failure the message of the
 * error is available from ik_last_error() on the calling thread until the
 * next call. Strings returned through char** parameters are owned by the
 * caller and released with ik_free_string(). Parameters and reports are
 * exchanged as JSON text. */
#ifndef IMPUTEKIT_H
#define IMPUTEKIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define IK_API __attribute__((visibility("default")))
#else
#define IK_API
#endif

typedef enum ik_status {
  IK_OK = 0,
  IK_E_INVALID_ARGUMENT = 1, /* bad argument, unknown method or dataset, malformed JSON */
  IK_E_DATA = 2,             /* input data violates a precondition */
  IK_E_RUNTIME = 3           /* I/O failure, unavailable dataset, internal error */
} ik_status;

typedef struct ik_table ik_table;
typedef struct ik_mask ik_mask;
typedef struct ik_report ik_report;

IK_API const char* ik_version(void);
IK_API const char* ik_last_error(void);
/* Name of the library error kind behind the last failure, e.g. "TooFewDonors". */
IK_API const char* ik_last_error_kind(void);
IK_API void ik_free_string(char* s);

/* --- tables --- */
IK_API ik_status ik_table_load_csv(const char* csv_path, const char* schema_path, ik_table** out);
IK_API ik_status ik_table_load_builtin(const char* name, ik_table** out);
IK_API ik_status ik_table_write_csv(const ik_table* table, const char* path);
IK_API ik_status ik_table_to_csv(const ik_table* table, char** out);
IK_API ik_status ik_table_schema_json(const ik_table* table, char** out);
IK_API size_t ik_table_rows(const ik_table* table);
IK_API size_t ik_table_cols(const ik_table* table);
IK_API size_t ik_table_missing_count(const ik_table* table);
IK_API void ik_table_free(ik_table* table);

/* --- amputation and masks --- */
IK_API ik_status ik_ampute_mcar(const ik_table* complete, double fraction, uint64_t seed,
                                ik_table** out_table, ik_mask** out_mask);
IK_API ik_status ik_mask_read_csv(const char* path, const ik_table* table, ik_mask** out);
IK_API ik_status ik_mask_to_csv(const ik_mask* mask, char** out);
IK_API size_t ik_mask_size(const ik_mask* mask);
IK_API void ik_mask_free(ik_mask* mask);

/* --- imputation and scoring --- */

/* method: "knn", "mice" or "missforest". params_json may be NULL for defaults.
 * diagnostics_json may be NULL when not wanted. */
IK_API ik_status ik_impute(const ik_table* table, const char* method, const char* params_json,
                           uint64_t seed, ik_table** out_table, char** diagnostics_json);
IK_API ik_status ik_method_defaults(const char* method, char** out_json);
IK_API ik_status ik_describe(const ik_table* table, char** out_json);
IK_API ik_status ik_score(const ik_table* complete, const ik_table* imputed, const ik_mask* mask,
                          char** out_json);

/* --- experiments --- */

/* threads overrides the configuration's thread budget unless it is 0. */
IK_API ik_status ik_bench_run(const char* config_json, unsigned threads, ik_report** out);
IK_API ik_status ik_report_to_json(const ik_report* report, int include_raw, char** out);
IK_API ik_status ik_report_to_csv(const ik_report* report, char** out);
IK_API ik_status ik_report_trials_csv(const ik_report* report, char** out);
IK_API void ik_report_free(ik_report* report);

/* params_json: {"key", "threshold", "repetitions", "keep_repetition",
 * "include_timing", "seed", "forest": {...missforest parameters}}.
 * out_imputed may be NULL. */
IK_API ik_status ik_pipeline_run(const ik_table* input, const char* params_json, char** report_json,
                                 ik_table** out_imputed);

#ifdef __cplusplus
}
#endif

#endif
