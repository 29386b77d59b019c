/* One-bit rank-one matrix sensing: C interface.
 *
 * The core is C++; this header is the stable boundary for the shared
 * library. All objects are opaque handles created and destroyed here, all
 * functions return onebit_status, and the last failure message is available
 * per thread through onebit_last_error(). Matrix buffers are column-major.
 */
#ifndef ONEBIT_ONEBIT_H
#define ONEBIT_ONEBIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum onebit_status {
  ONEBIT_OK = 0,
  ONEBIT_ERROR = 1,               /* unspecified failure */
  ONEBIT_ERROR_CONFIG = 2,        /* invalid configuration or arguments */
  ONEBIT_ERROR_NUMERIC = 3,       /* numerical failure (rank deficiency, ...) */
  ONEBIT_ERROR_VERIFY_FAILED = 4  /* verification ran, some checks failed */
} onebit_status;

typedef struct onebit_model onebit_model;   /* planted ground truth */
typedef struct onebit_batch onebit_batch;   /* one-bit observation batch */
typedef struct onebit_solver onebit_solver; /* iterative recovery state */

/* Label noise: kind 0 = none, 1 = gaussian (param = xi), 2 = flip (param = p). */
typedef struct onebit_noise {
  int kind;
  double param;
} onebit_noise;

const char* onebit_version(void);

/* Message describing the most recent failure on this thread. */
const char* onebit_last_error(void);

/* ---- ground truth ------------------------------------------------------ */

/* Plants a column-normalized rank-k matrix of size d1 x d2. */
onebit_status onebit_model_create(int64_t d1, int64_t d2, int64_t k,
                                  uint64_t seed, onebit_model** out);
void onebit_model_destroy(onebit_model* model);
onebit_status onebit_model_dims(const onebit_model* model, int64_t* d1,
                                int64_t* d2, int64_t* k);
/* Copies the planted matrix into out (column-major, len >= d1*d2). */
onebit_status onebit_model_matrix(const onebit_model* model, double* out,
                                  size_t len);

/* ---- observation batches ----------------------------------------------- */

/* Single-label sampling: iid Gaussian features, uniform class indices. */
onebit_status onebit_batch_sample(const onebit_model* model, int64_t m,
                                  onebit_noise noise, uint64_t seed,
                                  onebit_batch** out);
/* Full-observation sampling: pair blocks share one feature vector. */
onebit_status onebit_batch_sample_full(const onebit_model* model,
                                       int64_t n_pairs, onebit_noise noise,
                                       uint64_t seed, onebit_batch** out);
void onebit_batch_destroy(onebit_batch* batch);
onebit_status onebit_batch_size(const onebit_batch* batch, int64_t* m);

/* ---- solver ------------------------------------------------------------ */

typedef struct onebit_solver_config {
  int64_t d1, d2, k;
  int64_t m;          /* batch size used per iteration */
  int64_t iterations; /* outer iteration budget (informational) */
  int64_t init_power_iters;
  double norm_floor;
  uint64_t seed;
} onebit_solver_config;

/* Initializes the solver state from a first batch (spectral start). */
onebit_status onebit_solver_create(const onebit_solver_config* config,
                                   const onebit_batch* init_batch,
                                   onebit_solver** out);
void onebit_solver_destroy(onebit_solver* solver);
/* One outer iteration on a fresh batch. */
onebit_status onebit_solver_step(onebit_solver* solver,
                                 const onebit_batch* batch);
onebit_status onebit_solver_iteration(const onebit_solver* solver, int64_t* t);
/* Copies the current column-normalized estimate (column-major, len >= d1*d2). */
onebit_status onebit_solver_estimate(const onebit_solver* solver, double* out,
                                     size_t len);
/* Spectral-norm recovery error against a planted model. */
onebit_status onebit_solver_recovery_error(const onebit_solver* solver,
                                           const onebit_model* model,
                                           double* out);

/* ---- experiment drivers (JSON config in, CSV/JSON out) ------------------ */

/* Runs the experiment described by the JSON config file. When
 * deterministic_timing is nonzero, all wall-time fields are written as zero
 * so repeated runs produce byte-identical outputs. */
onebit_status onebit_run_experiment(const char* config_path,
                                    int deterministic_timing);

/* Runs one experiment per comma-separated axis value (axis is "m",
 * "noise_p" or "noise_xi") and appends a sweep summary CSV. */
onebit_status onebit_sweep(const char* config_path, const char* axis,
                           const char* comma_values, int deterministic_timing,
                           int parallel);

/* Runs a verification suite ("lemma1", "lemma2", "rip", "dilation",
 * "normloss", "wedin" or "all"). Negative overrides keep suite defaults.
 * Writes JSON reports to report_path (NULL for the default file) and, when
 * table_out is non-NULL, returns a printable table via onebit_string_free. */
onebit_status onebit_verify(const char* suite, int64_t dim_override,
                            int64_t samples_override, int64_t seed_override,
                            const char* report_path, char** table_out);

void onebit_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* ONEBIT_ONEBIT_H */
