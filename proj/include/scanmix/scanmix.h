#ifndef SCANMIX_SCANMIX_H
#define SCANMIX_SCANMIX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SCANMIX_API __declspec(dllexport)
#else
#define SCANMIX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Return codes. On failure scanmix_last_error() describes the cause. */
typedef enum scanmix_status {
  SCANMIX_OK = 0,
  SCANMIX_E_INVALID = 1,      /* argument or config validation failed */
  SCANMIX_E_BUDGET = 2,       /* exact computation exceeds its size or time budget */
  SCANMIX_E_PRECONDITION = 3, /* operation not applicable to the given state */
  SCANMIX_E_IO = 4,
  SCANMIX_E_INTERNAL = 5,
  SCANMIX_E_CHECKS_FAILED = 6 /* property suite ran and at least one check failed */
} scanmix_status;

typedef enum scanmix_mode {
  SCANMIX_MODE_STANDARD = 0,
  SCANMIX_MODE_RESTRICTED = 1
} scanmix_mode;

typedef struct scanmix_params {
  int n;
  int k;
  double beta;
  scanmix_mode mode;
} scanmix_params;

typedef struct scanmix_kernel scanmix_kernel;
typedef struct scanmix_chain scanmix_chain;
typedef struct scanmix_run_result scanmix_run_result;

/* Thread-local message for the last failing call on this thread. Never NULL. */
SCANMIX_API const char* scanmix_last_error(void);
SCANMIX_API const char* scanmix_version(void);
SCANMIX_API const char* scanmix_status_name(int status);

/* Validates params. *restricted_warning (optional) is set when restricted mode is used with beta <= 1. */
SCANMIX_API int scanmix_validate_params(const scanmix_params* params, int* restricted_warning);

/* (1 + tanh(beta x)) / 2 */
SCANMIX_API int scanmix_update_prob_plus(double beta, double x, double* out);

/* Positive root of tanh(beta s) = s, beta > 1. */
SCANMIX_API int scanmix_s_star(double beta, double* out);

/* Stationary plus-count law (folded in restricted mode); weights must hold n + 1 doubles. */
SCANMIX_API int scanmix_stationary(const scanmix_params* params, double* weights, size_t len);

/* Exact plus-count kernel. */
SCANMIX_API int scanmix_kernel_build(const scanmix_params* params, scanmix_kernel** out);
SCANMIX_API int scanmix_kernel_import(const char* path, scanmix_kernel** out);
SCANMIX_API int scanmix_kernel_export(const scanmix_kernel* kernel, const char* path);
SCANMIX_API void scanmix_kernel_free(scanmix_kernel* kernel);
SCANMIX_API int scanmix_kernel_params(const scanmix_kernel* kernel, scanmix_params* out);
SCANMIX_API int scanmix_kernel_entry(const scanmix_kernel* kernel, int m, int m_next, double* out);
/* Smallest t with max over extremal starts of TV(K^t(m0, .), mu) <= eps. */
SCANMIX_API int scanmix_kernel_mixing_time(const scanmix_kernel* kernel, double eps,
                                           int64_t t_max, int64_t* out);
/* TV to stationarity from plus-count m0 at ascending times. */
SCANMIX_API int scanmix_kernel_d_profile(const scanmix_kernel* kernel, int m0,
                                         const int64_t* times, size_t count, double* d_out);

/* Plus-count after t scan steps from m0 on stream (seed, stream). */
SCANMIX_API int scanmix_sample_mag_chain(const scanmix_params* params, int m0, int64_t t,
                                         uint64_t seed, uint64_t stream, int* out);

/* Configuration-level chain; starts with the first plus_count vertices at +1. */
SCANMIX_API int scanmix_chain_create(const scanmix_params* params, int plus_count, uint64_t seed,
                                     uint64_t stream, scanmix_chain** out);
SCANMIX_API int scanmix_chain_step(scanmix_chain* chain, int64_t steps);
SCANMIX_API int scanmix_chain_plus_count(const scanmix_chain* chain, int* out);
SCANMIX_API int scanmix_chain_spins(const scanmix_chain* chain, int8_t* out, size_t len);
SCANMIX_API void scanmix_chain_free(scanmix_chain* chain);

/* Overrides applied on top of the config. Zero / NULL fields leave the config value. */
typedef struct scanmix_run_options {
  int workers;
  const char* out_dir;
  const char* format; /* "csv" or "json" */
  int has_seed;
  uint64_t seed;
  const char* fault; /* "self-spin" injects the self-field mutation */
  int record_timing;
} scanmix_run_options;

/*
 * Runs a scenario. scenario is a scenario name (cutoff_profile, ...) or a CLI
 * subcommand (profile, ...). config_json may be NULL for the defaults.
 * Returns SCANMIX_E_CHECKS_FAILED (with *out still set) when property checks fail.
 */
SCANMIX_API int scanmix_run(const char* scenario, const char* config_json,
                            const scanmix_run_options* options, scanmix_run_result** out);
SCANMIX_API size_t scanmix_run_file_count(const scanmix_run_result* result);
SCANMIX_API const char* scanmix_run_file(const scanmix_run_result* result, size_t index);
SCANMIX_API size_t scanmix_run_record_count(const scanmix_run_result* result);
SCANMIX_API int scanmix_run_failed_checks(const scanmix_run_result* result);
SCANMIX_API void scanmix_run_free(scanmix_run_result* result);

#ifdef __cplusplus
}
#endif

#endif
