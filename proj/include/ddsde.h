#ifndef DDSDE_H
#define DDSDE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Density-dependent SDE laboratory, C surface. All functions return a
 * ddsde_status unless documented otherwise; on any error the thread-local
 * message from ddsde_last_error() describes the failure. Handles are opaque
 * and must be released with the matching _free call. */

typedef enum ddsde_status {
  DDSDE_OK = 0,
  DDSDE_INVALID_ARGUMENT = 1,
  DDSDE_DOMAIN_ERROR = 2,
  DDSDE_RESOLUTION_ERROR = 3,
  DDSDE_CONFIG_ERROR = 4,
  DDSDE_IO_ERROR = 5,
  DDSDE_DATA_MISMATCH = 6,
  DDSDE_NOT_APPLICABLE = 7,
  DDSDE_INTERNAL_ERROR = 8,
} ddsde_status;

typedef struct ddsde_config ddsde_config;
typedef struct ddsde_grid ddsde_grid;

/* Version string, e.g. "ddsde 0.1.0". Static storage, never NULL. */
const char* ddsde_version(void);

/* Message of the last failed call on this thread; empty string if none. */
const char* ddsde_last_error(void);

/* Worker threads for subsequent runs (0 restores the DDSDE_THREADS /
 * hardware default). Thread count never changes numerical results. */
ddsde_status ddsde_set_threads(int count);

/* ---- experiment configs ---- */

/* Parse a config file (base directory for relative paths = the file's
 * directory). The handle owns a validated copy; *out is NULL on error. */
ddsde_status ddsde_config_load(const char* path, ddsde_config** out);

/* Parse config text; relative paths resolve against base_dir ("." if NULL). */
ddsde_status ddsde_config_parse(const char* text, const char* base_dir,
                                ddsde_config** out);

/* Re-run field validation (useful after overrides). */
ddsde_status ddsde_config_validate(const ddsde_config* config);

/* Experiment name. Valid until the config is freed. */
const char* ddsde_config_name(const ddsde_config* config);

/* Overrides applied before the next run; each re-validates eagerly. */
ddsde_status ddsde_config_set_out_dir(ddsde_config* config, const char* dir);
ddsde_status ddsde_config_set_seed(ddsde_config* config, uint64_t seed);
ddsde_status ddsde_config_set_density_source(ddsde_config* config,
                                             const char* mode);

void ddsde_config_free(ddsde_config* config);

/* ---- orchestration ---- */

/* Run engines + diagnostics, write artifacts and manifest.json into the
 * config's output directory. On success *claims_failed is the number of
 * failed claims (0 = all pass) and *summary, if non-NULL, receives the
 * per-claim [PASS]/[FAIL] lines (release with ddsde_string_free); the call
 * itself only fails on hard errors. */
ddsde_status ddsde_run_experiment(const ddsde_config* config,
                                  int* claims_failed, char** summary);

/* Compare two completed run directories. metric: "l1", "sup", or
 * "weak-residual". *pass is 1 iff the value meets run_a's threshold. value /
 * threshold / pass pointers may be NULL. */
ddsde_status ddsde_compare(const char* run_dir_a, const char* run_dir_b,
                           const char* metric, double* value,
                           double* threshold, int* pass);

/* Render a report over run directories. *out receives a NUL-terminated
 * document allocated for the caller; release with ddsde_string_free. */
ddsde_status ddsde_report(const char* const* run_dirs, size_t count,
                          char** out);

void ddsde_string_free(char* text);

/* ---- stored densities ---- */

/* Load a density artifact (.ddg). *out is NULL on error. */
ddsde_status ddsde_grid_load(const char* path, ddsde_grid** out);

/* dim, cells per axis (length dim), axis bounds (length dim each). Pointers
 * may be NULL to skip. cells/lower/upper must have room for the dimension,
 * which is at most 2. */
ddsde_status ddsde_grid_info(const ddsde_grid* grid, int* dim, uint64_t* cells,
                             double* lower, double* upper);

/* Number of stored values (product of cells). */
uint64_t ddsde_grid_size(const ddsde_grid* grid);

/* Copy the cell values (row-major) into values[0..size). */
ddsde_status ddsde_grid_values(const ddsde_grid* grid, double* values,
                               uint64_t size);

/* Grid quadrature of the density (1 up to boundary clipping). */
ddsde_status ddsde_grid_mass(const ddsde_grid* grid, double* mass);

/* L1 distance after restriction to the common grid; grids must be nested. */
ddsde_status ddsde_grid_l1(const ddsde_grid* a, const ddsde_grid* b,
                           double* distance);

void ddsde_grid_free(ddsde_grid* grid);

#ifdef __cplusplus
}
#endif

#endif /* DDSDE_H */
