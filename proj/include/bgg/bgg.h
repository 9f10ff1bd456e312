#ifndef BGG_BGG_H
#define BGG_BGG_H

/* C interface to the run-magnitude/duration library: evaluation and
 * sampling through an opaque model handle, plus file-to-file batch
 * operations (fitting, extraction, analysis, testing).  Every function
 * returns a status code; bgg_last_error() describes the most recent
 * failure on the calling thread. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bgg_status {
  BGG_OK = 0,
  BGG_ERR_DOMAIN = 1,     /* argument outside the mathematical domain */
  BGG_ERR_NOCONV = 2,     /* iteration or series failed to converge */
  BGG_ERR_IO = 3,         /* file could not be opened or written */
  BGG_ERR_PARSE = 4,      /* malformed text input */
  BGG_ERR_DEGENERATE = 5, /* estimate or statistic sits on a boundary */
  BGG_ERR_INVALID = 6,    /* null pointer or unrecognized option */
  BGG_ERR_INTERNAL = 7
} bgg_status;

const char* bgg_last_error(void);

/* Opaque handle over either law: pass 3 parameters (beta, alpha, p) for the
 * (magnitude, duration) law on counts >= 1, or 4 (beta, alpha, p, r) for
 * the process law on counts >= 0. */
typedef struct bgg_model bgg_model;

bgg_status bgg_model_create(const double* params, size_t n_params, bgg_model** out);
void bgg_model_destroy(bgg_model* model);

bgg_status bgg_model_joint_pdf(const bgg_model* model, double x, long n, double* out);
bgg_status bgg_model_joint_cdf(const bgg_model* model, double x, long n, double* out);
bgg_status bgg_model_marginal_pdf(const bgg_model* model, double x, double* out);
bgg_status bgg_model_marginal_cdf(const bgg_model* model, double x, double* out);
/* Any output pointer may be null to skip that moment. */
bgg_status bgg_model_moments(const bgg_model* model, double* mean_x, double* mean_n,
                             double* var_x, double* var_n, double* correlation);
/* Writes n draws as `x,n` rows. */
bgg_status bgg_model_sample_csv(const bgg_model* model, long n, uint64_t seed,
                                const char* out_csv);

/* Fits `x,n` pairs; model is "bgg", "beg", or "bmixgnb"; parametrization is
 * "rate" or "ortho" ("beg" supports only "rate").  Writes a fit-report
 * JSON. */
bgg_status bgg_fit_csv(const char* pairs_csv, const char* model,
                       const char* parametrization, int observed_information,
                       double confidence_level, const char* out_json);

/* Extracts (magnitude, duration) pairs of maximal positive log-return runs
 * from a `date,rate` series.  The out parameters may be null. */
bgg_status bgg_extract_csv(const char* rates_csv, const char* out_pairs_csv,
                           long* n_pairs, int* trailing_open_run);

/* Builds a synthetic `date,rate` series realizing the 3-parameter law. */
bgg_status bgg_synthesize_rates_csv(const double* params3, long n_pairs,
                                    uint64_t seed, const char* out_csv);

/* Full pipeline: extract runs from the rate series, fit the full and
 * restricted models, test the unit-shape hypothesis, and write the report
 * bundle into out_dir.  Nonpositive table sizes select defaults. */
bgg_status bgg_analyze(const char* rates_csv, const char* out_dir,
                       int histogram_bins, int duration_rows,
                       int conditional_max_duration);

/* Simulates the 4-parameter process on a time grid; writes
 * `path,t,x,n` rows. */
bgg_status bgg_simulate_path_csv(const double* params4, const double* grid,
                                 size_t grid_len, long n_paths, uint64_t seed,
                                 const char* out_csv);

/* Goodness of fit of `x,n` pairs against fixed parameters (3 or 4): KS for
 * the magnitudes, chi-square with a merged tail cell for the counts.
 * Writes both results as JSON. */
bgg_status bgg_gof_csv(const char* pairs_csv, const double* params,
                       size_t n_params, const char* out_json);

bgg_status bgg_lr_test(double loglik_full, double loglik_restricted, long df,
                       double* statistic, double* p_value);

/* Wald test of one component of a written fit report against a null value. */
bgg_status bgg_wald_test_json(const char* fit_json, const char* component,
                              double null_value, double* statistic, double* p_value);

#ifdef __cplusplus
}
#endif

#endif /* BGG_BGG_H */
