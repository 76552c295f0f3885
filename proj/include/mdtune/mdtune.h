/* C interface of the mdtune library.
 *
 * Every function returns an mdtune_status. On failure the message is
 * available from mdtune_last_error() on the same thread until the next call.
 * Strings handed out as mdtune_text are owned by the caller and released
 * with mdtune_text_free. Composite data crosses the boundary as JSON, in the
 * formats described in docs/formats.md.
 */
#ifndef MDTUNE_H
#define MDTUNE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MDTUNE_API __declspec(dllexport)
#else
#define MDTUNE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mdtune_status {
  MDTUNE_OK = 0,
  MDTUNE_E_INVALID_ARGUMENT = 1,
  MDTUNE_E_INVALID_CONFIG = 2,
  MDTUNE_E_MISSING_DATUM = 3,
  MDTUNE_E_PARSE = 4,
  MDTUNE_E_EXECUTOR_UNAVAILABLE = 5,
  MDTUNE_E_IO = 6,
  MDTUNE_E_INTERNAL = 99
} mdtune_status;

typedef struct mdtune_text mdtune_text;
typedef struct mdtune_plan mdtune_plan;
typedef struct mdtune_result mdtune_result;

MDTUNE_API const char* mdtune_version(void);
MDTUNE_API const char* mdtune_last_error(void);
/* Byte offset of the last MDTUNE_E_PARSE failure, 0 otherwise. */
MDTUNE_API size_t mdtune_last_error_offset(void);

MDTUNE_API const char* mdtune_text_data(const mdtune_text* t);
MDTUNE_API size_t mdtune_text_size(const mdtune_text* t);
MDTUNE_API void mdtune_text_free(mdtune_text* t);

/* ---- plans ---- */

/* Builds a plan from manifest JSON; relative node paths resolve against base_dir (may be NULL). */
MDTUNE_API mdtune_status mdtune_plan_from_manifest(const char* manifest_json, const char* base_dir,
                                                   mdtune_plan** out);
MDTUNE_API mdtune_status mdtune_plan_from_manifest_file(const char* path, mdtune_plan** out);
MDTUNE_API mdtune_status mdtune_plan_from_json(const char* plan_json, mdtune_plan** out);
MDTUNE_API void mdtune_plan_free(mdtune_plan* plan);
MDTUNE_API size_t mdtune_plan_config_count(const mdtune_plan* plan);
MDTUNE_API mdtune_status mdtune_plan_to_json(const mdtune_plan* plan, mdtune_text** out);
MDTUNE_API mdtune_status mdtune_plan_command(const mdtune_plan* plan, size_t index, mdtune_text** out);
MDTUNE_API mdtune_status mdtune_plan_script(const mdtune_plan* plan, mdtune_text** out);

/* Multi-simulation layout for the manifest's "multi" block: JSON with the plan and the command. */
MDTUNE_API mdtune_status mdtune_multi_plan_file(const char* manifest_path, mdtune_text** out);

/* ---- sweeps ---- */

typedef enum mdtune_executor { MDTUNE_EXECUTOR_SYNTHETIC = 0, MDTUNE_EXECUTOR_SHELL = 1 } mdtune_executor;

typedef struct mdtune_sweep_options {
  mdtune_executor executor;
  uint32_t repeats;     /* 0: take the plan's value */
  const char* workdir;  /* shell executor only; NULL: current directory */
} mdtune_sweep_options;

MDTUNE_API mdtune_status mdtune_sweep(const mdtune_plan* plan, const mdtune_sweep_options* options,
                                      mdtune_result** out);
MDTUNE_API mdtune_status mdtune_result_from_json(const char* sweep_json, mdtune_result** out);
MDTUNE_API void mdtune_result_free(mdtune_result* result);
MDTUNE_API mdtune_status mdtune_result_to_json(const mdtune_result* result, mdtune_text** out);
MDTUNE_API size_t mdtune_result_row_count(const mdtune_result* result);
MDTUNE_API size_t mdtune_result_failed_rows(const mdtune_result* result);
/* MDTUNE_E_INVALID_ARGUMENT when no row succeeded. */
MDTUNE_API mdtune_status mdtune_result_best(const mdtune_result* result, size_t* index, double* mean_ns_day);

typedef struct mdtune_report_options {
  const char* format;       /* "md", "csv" or "json" */
  double price_normalizer;  /* <= 0: 1000 EUR */
  int has_power;            /* nonzero: add energy, trajectory cost and yield columns */
  double power_w;
} mdtune_report_options;

MDTUNE_API mdtune_status mdtune_result_report(const mdtune_result* result, const mdtune_report_options* options,
                                              mdtune_text** out);

/* ---- logs ---- */

MDTUNE_API mdtune_status mdtune_parse_log(const char* text, size_t size, mdtune_text** metrics_json);
/* logs_json: [{"source": "...", "text": "..."}, ...] */
MDTUNE_API mdtune_status mdtune_log_table(const char* logs_json, const char* format, mdtune_text** out);

/* ---- economics tables ---- */

MDTUNE_API mdtune_status mdtune_cost_table(const char* input_json, const char* format, mdtune_text** out);
MDTUNE_API mdtune_status mdtune_scaling_table(const char* input_json, const char* format, mdtune_text** out);
/* weights: "C1=1,C4=0.5" or a preset such as "lifetime-yield" */
MDTUNE_API mdtune_status mdtune_recommend_table(const char* input_json, const char* weights, const char* format,
                                                mdtune_text** out);

/* ---- scalar helpers ---- */

MDTUNE_API mdtune_status mdtune_gpu_id_string(uint32_t gpus, uint32_t pp_ranks, mdtune_text** out);
MDTUNE_API mdtune_status mdtune_render_command(const char* config_json, const char* engine_json, mdtune_text** out);
MDTUNE_API mdtune_status mdtune_parse_command(const char* command, mdtune_text** config_json);

typedef struct mdtune_balance {
  double rcoulomb_nm;
  double spacing_nm;
  uint32_t grid[3];
  uint32_t grid0[3];
  double pp_cost_ratio;
  double pme_cost_ratio;
} mdtune_balance;

MDTUNE_API mdtune_status mdtune_balance_cutoff(double rc0, double spacing0, const double box_nm[3], double k,
                                               mdtune_balance* out);

typedef enum mdtune_power_kind { MDTUNE_POWER_METER_KWH_PER_300S = 0, MDTUNE_POWER_DIRECT_WATTS = 1 } mdtune_power_kind;

MDTUNE_API mdtune_status mdtune_effective_power(mdtune_power_kind kind, double value, uint32_t gpus_installed,
                                                uint32_t gpus_active, double idle_gpu_power_w, double* watts);

typedef struct mdtune_econ_row {
  double production_us;
  double energy_cost;
  double trajectory_cost;
  double yield;
} mdtune_econ_row;

MDTUNE_API mdtune_status mdtune_econ_row_compute(double ns_per_day, double power_w, double node_cost,
                                                 double lifetime_years, double energy_price, mdtune_econ_row* out);
MDTUNE_API mdtune_status mdtune_perf_per_price(double ns_per_day, double cost, double normalizer, double* out);
MDTUNE_API mdtune_status mdtune_parallel_efficiency(double p_m, uint32_t m, double p_1, double* out);
MDTUNE_API mdtune_status mdtune_multi_sim_gain(double p_single, double p_per_replica, double* out);
/* Linear fit of performance over clock; gain = fit(max_mhz) / fit(default_mhz) - 1, as a fraction. */
MDTUNE_API mdtune_status mdtune_clock_fit(const double* clocks_mhz, const double* ns_per_day, size_t n,
                                          double default_mhz, double max_mhz, double* slope, double* intercept,
                                          double* gain);
MDTUNE_API mdtune_status mdtune_normalize_compiler(double ns_per_day, double from_ratio, double to_ratio,
                                                   double* out);

#ifdef __cplusplus
}
#endif

#endif /* MDTUNE_H */
