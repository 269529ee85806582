/*
 * consflux C API: learning conservative fluxes for 1-D hyperbolic systems
 * from snapshot data.
 *
 * All functions return cf_status; on failure cf_last_error() describes the
 * problem (the message is thread-local). Handles are opaque and must be
 * released with their close function. The JSON config formats accepted by
 * the pipeline entry points are documented in the project README.
 */
#ifndef CONSFLUX_H
#define CONSFLUX_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cf_status {
  CF_OK = 0,
  CF_ERROR_VALIDATION = 1,
  CF_ERROR_NUMERIC = 2,
  CF_ERROR_IO = 3
} cf_status;

const char* cf_version(void);
/* Message of the most recent failure on this thread; never NULL. */
const char* cf_last_error(void);

/* Worker threads for data generation and linear algebra. */
cf_status cf_set_threads(int threads);

/* ---- pipeline ---------------------------------------------------------- */

/* Writes dataset.json/dataset.bin plus a resolved config echo to out_dir.
 * The config may name a "preset" with optional field overrides. */
cf_status cf_generate(const char* config_json, const char* out_dir);

/* Trains a model against a dataset; writes checkpoint.json, history.csv and
 * the config echo to out_dir. */
cf_status cf_train(const char* config_json, const char* out_dir);

/* Rolls a checkpoint forward from an initial state; writes prediction.json/
 * prediction.bin in dataset format. */
cf_status cf_predict(const char* config_json, const char* out_dir);

/* Compares a prediction dataset against a reference dataset; writes
 * metrics.json and the per-figure CSV files. */
cf_status cf_evaluate(const char* config_json, const char* out_dir);

/* Resolved JSON for a named experiment preset. `required` receives the
 * full length (excluding the terminator); the copy is truncated to
 * `capacity`. */
cf_status cf_preset_config(const char* name, char* buffer, size_t capacity, size_t* required);
/* Newline-separated preset names, same buffer contract. */
cf_status cf_list_presets(char* buffer, size_t capacity, size_t* required);

/* ---- dataset handles --------------------------------------------------- */

typedef struct cf_dataset cf_dataset;

typedef struct cf_dataset_info {
  int32_t n_traj;
  int32_t n_snapshots;
  int32_t n_comp;
  int32_t n_cells;
  double dt;
  double domain_a;
  double domain_b;
  double noise_level;
  uint64_t seed;
  char system[24];
  char bc[24];
} cf_dataset_info;

cf_status cf_dataset_open(const char* manifest_path, cf_dataset** out);
void cf_dataset_close(cf_dataset* dataset);
cf_status cf_dataset_get_info(const cf_dataset* dataset, cf_dataset_info* info);
/* Cell averages of one snapshot, component-major; count must equal
 * n_comp * n_cells. */
cf_status cf_dataset_get_values(const cf_dataset* dataset, int32_t trajectory,
                                int32_t snapshot, double* buffer, size_t count);

/* ---- model handles ------------------------------------------------------ */

typedef struct cf_model cf_model;

typedef struct cf_model_info {
  int32_t n_comp;
  int32_t n_cells;
  int32_t stencil_left;
  int32_t stencil_right;
  double dx;
  double dt;
  double lambda2;
  int64_t epoch;
  char form[16];
  char bc[24];
  char system[24];
} cf_model_info;

cf_status cf_model_open(const char* checkpoint_path, cf_model** out);
void cf_model_close(cf_model* model);
cf_status cf_model_get_info(const cf_model* model, cf_model_info* info);
/* March `steps` model steps of size dt from u0 (component-major,
 * n_comp * n_cells values). `out` receives the states after each step,
 * steps * n_comp * n_cells values. */
cf_status cf_model_rollout(const cf_model* model, const double* u0, int32_t n_comp,
                           int32_t n_cells, int32_t steps, double dt, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CONSFLUX_H */
