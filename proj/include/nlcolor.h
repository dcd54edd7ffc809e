/* C API for the nlcolor shared library.
 *
 * All functions return NLC_OK (0) on success. On failure they return a
 * nonzero status and the thread-local message from nlc_last_error()
 * describes what went wrong. Handles are opaque; every *_open/_load call
 * pairs with the matching *_free.
 */
#ifndef NLCOLOR_H
#define NLCOLOR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nlc_status {
  NLC_OK = 0,
  NLC_ERR_IO = 1,       /* file missing / unreadable / unwritable */
  NLC_ERR_FORMAT = 2,   /* malformed input file */
  NLC_ERR_INVALID = 3,  /* bad argument or precondition violation */
  NLC_ERR_INTERNAL = 4
} nlc_status;

const char* nlc_last_error(void);
const char* nlc_version(void);

/* ------------------------------------------------------------------ grids */

typedef struct nlc_grid nlc_grid;

nlc_status nlc_grid_read(const char* path, nlc_grid** out);
nlc_status nlc_grid_write(const nlc_grid* grid, const char* path);
void nlc_grid_free(nlc_grid* grid);
int nlc_grid_ncols(const nlc_grid* grid);
int nlc_grid_nrows(const nlc_grid* grid);

/* Aggregates src into the geometry of target: per-cell mean and population
 * SD over source cells whose centers fall inside the target cell. */
nlc_status nlc_grid_aggregate(const nlc_grid* src, const nlc_grid* target,
                              nlc_grid** mean_out, nlc_grid** sd_out);

/* Mean/max differences against the 8-neighborhood. */
nlc_status nlc_grid_neighborhood_diffs(const nlc_grid* grid, nlc_grid** mean_diff_out,
                                       nlc_grid** max_diff_out);

nlc_status nlc_write_rgb_ppm(const nlc_grid* r, const nlc_grid* g, const nlc_grid* b,
                             const char* path);

/* --------------------------------------------------------------- datasets */

typedef struct nlc_dataset nlc_dataset;

nlc_status nlc_dataset_read_csv(const char* path, nlc_dataset** out);
nlc_status nlc_dataset_write_csv(const nlc_dataset* ds, const char* path);
void nlc_dataset_free(nlc_dataset* ds);
size_t nlc_dataset_size(const nlc_dataset* ds);

/* Builds a dataset from grids sharing the ALAN geometry. Band grids and the
 * mask may be NULL. */
nlc_status nlc_assemble(const nlc_grid* alan, const nlc_grid* hbase_mean,
                        const nlc_grid* hbase_sd, const nlc_grid* red, const nlc_grid* green,
                        const nlc_grid* blue, const nlc_grid* mask, nlc_dataset** out);

/* Raster front door: reads ALAN and native-resolution HBASE (plus optional
 * band/mask rasters), aggregates to the ALAN geometry, derives neighborhood
 * features and writes the dataset CSV. NULL paths are skipped. */
nlc_status nlc_ingest(const char* alan_path, const char* hbase_path, const char* red_path,
                      const char* green_path, const char* blue_path, const char* mask_path,
                      const char* out_csv);

/* --------------------------------------------------------------- outliers */

/* Four-rule percentile exclusion. band is 'R', 'G' or 'B'. Writes the kept
 * and removed CSVs; *fraction_removed_out (optional) receives the removed
 * share. */
nlc_status nlc_filter_outliers(const char* in_csv, char band, double tail_fraction,
                               const char* kept_csv, const char* removed_csv,
                               double* fraction_removed_out);

/* ----------------------------------------------------------------- models */

typedef struct nlc_model nlc_model;

/* model_kind: "ols", "kernel", "forest" or "elmap".
 * options: comma-separated key=value pairs, all optional:
 *   bend=0.05 stretch=0 dims=12x12 max_iter=100 tol=1e-4   (elmap)
 *   trees=32 min_leaf=5 bootstrap=1                        (forest)
 *   folds=5                                                (kernel)
 *   drop=alan_mean_diff|...                                (any; excluded predictors)
 */
nlc_status nlc_fit(const char* model_kind, const char* in_csv, char band, const char* options,
                   uint64_t seed, const char* out_model_path);

nlc_status nlc_model_load(const char* path, nlc_model** out);
void nlc_model_free(nlc_model* m);
nlc_status nlc_model_predict(const nlc_model* m, const double predictors[5], double* out);

/* Applies a saved model to every row of a dataset CSV; the output CSV gains
 * a `predicted` column. */
nlc_status nlc_predict_csv(const char* model_path, const char* in_csv, const char* out_csv);

/* Elastic-map penalty sweep; writes one map per penalty plus an FVU table
 * (sweep.csv) under out_dir. penalties may be NULL for the standard nine. */
nlc_status nlc_sweep(const char* in_csv, char band, const char* penalties,
                     const char* out_dir);

/* ---------------------------------------------------------------- harness */

/* Runs the cross-city experiment described by the config file. out_dir
 * overrides the config's output directory when non-NULL; write_json also
 * emits report.json. */
nlc_status nlc_run_experiment(const char* config_path, const char* out_dir, int write_json);

/* Predicts all three bands for a panchromatic scene and writes the band
 * grids plus a composite PPM. */
nlc_status nlc_colorize(const char* model_r_path, const char* model_g_path,
                        const char* model_b_path, const char* alan_path,
                        const char* hbase_path, const char* out_dir);

/* Pearson-r drop when predictors are excluded and the model refit on the
 * same data. drop: comma-separated predictor names. */
nlc_status nlc_factor_contribution(const char* in_csv, char band, const char* model_kind,
                                   const char* drop, uint64_t seed, double* delta_r_out);

/* Re-renders a saved report CSV as the plain-text comparison tables. */
nlc_status nlc_report_tables(const char* report_csv, const char* consistency_csv,
                             const char* out_txt);

#ifdef __cplusplus
}
#endif

#endif /* NLCOLOR_H */
