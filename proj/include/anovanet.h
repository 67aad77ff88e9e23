#ifndef ANOVANET_H
#define ANOVANET_H

/* C API for the structured interaction-model estimation library.
 *
 * Conventions:
 *  - Every fallible call returns anv_status; ANV_OK is 0.
 *  - On failure, anv_last_error() returns a thread-local message valid until
 *    the next failing call on the same thread.
 *  - Out-parameters are written only on ANV_OK.
 *  - Strings returned through char** are heap-allocated; release them with
 *    anv_string_free. Handles are released with their matching *_free.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ANV_API __declspec(dllexport)
#else
#define ANV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum anv_status {
  ANV_OK = 0,
  ANV_EINVAL = 1,    /* invalid argument or config schema violation */
  ANV_EIO = 2,       /* file or parse failure */
  ANV_EDIVERGED = 3, /* optimization diverged in every restart */
  ANV_EINTERNAL = 4  /* unexpected internal failure */
} anv_status;

ANV_API const char* anv_last_error(void);
ANV_API const char* anv_version(void);
ANV_API void anv_string_free(char* s);

typedef struct anv_dataset anv_dataset;
typedef struct anv_model anv_model;
typedef struct anv_plan anv_plan;
typedef struct anv_fit anv_fit;
typedef struct anv_pipeline_result anv_pipeline_result;

/* ---- datasets ----------------------------------------------------------- */

/* Builds a ground truth from key=value config text (same schema as the CLI
 * gen command) and samples a dataset from it. */
ANV_API anv_status anv_dataset_generate(const char* config_text, anv_dataset** out);

/* Rebuilds the ground truth for the same config schema and reports signal
 * strength as JSON: smallest univariate and bivariate L2 norms and the
 * sup-norm of the whole regression function. Free with anv_string_free. */
ANV_API anv_status anv_signal_report(const char* config_text, char** json);

ANV_API anv_status anv_dataset_load_csv(const char* path, anv_dataset** out);
ANV_API anv_status anv_dataset_load_bin(const char* path, anv_dataset** out);
ANV_API anv_status anv_dataset_save_csv(const anv_dataset* ds, const char* path);
ANV_API anv_status anv_dataset_save_bin(const anv_dataset* ds, const char* path);

/* Wraps caller data (row-major X of shape n x d). The data is copied. */
ANV_API anv_status anv_dataset_from_arrays(const double* X, const double* y, int64_t n,
                                           int32_t d, anv_dataset** out);

ANV_API anv_status anv_dataset_dims(const anv_dataset* ds, int64_t* n, int32_t* d);

/* Copies one row (length d) and its response. */
ANV_API anv_status anv_dataset_row(const anv_dataset* ds, int64_t i, double* x, double* y);

/* Clones the attached ground truth; ANV_EINVAL when the dataset has none. */
ANV_API anv_status anv_dataset_truth(const anv_dataset* ds, anv_model** out);

/* Order-preserving halves of sizes ceil(n/2) and floor(n/2). */
ANV_API anv_status anv_dataset_split(const anv_dataset* ds, anv_dataset** first,
                                     anv_dataset** second);

ANV_API void anv_dataset_free(anv_dataset* ds);

/* ---- models ------------------------------------------------------------- */

ANV_API anv_status anv_model_load(const char* path, anv_model** out);
ANV_API anv_status anv_model_save(const anv_model* m, const char* path);

/* Evaluates the truncated model at x (length d). */
ANV_API anv_status anv_model_eval(const anv_model* m, const double* x, int32_t d, double* out);

/* Identifiability projection; report_json (optional) receives defect
 * measurements before and after. */
ANV_API anv_status anv_model_project(const anv_model* m, anv_model** projected,
                                     char** report_json);

/* Monte Carlo squared-L2 distance between two models under uniform X. */
ANV_API anv_status anv_model_mc_l2(const anv_model* a, const anv_model* b, int64_t n_mc,
                                   uint64_t seed, double* estimate, double* std_error);

/* JSON description: d, B, mu, component keys. */
ANV_API anv_status anv_model_describe(const anv_model* m, char** json);

ANV_API void anv_model_free(anv_model* m);

/* ---- hyperparameter plans ----------------------------------------------- */

ANV_API anv_status anv_plan_lowdim(int64_t n, int32_t d, double beta1, double beta2, double B,
                                   anv_plan** out);

/* erm_free selects the assumption-free high-dimensional widths; zero gives
 * the restricted-strong-convexity widths. */
ANV_API anv_status anv_plan_highdim(int64_t n, int32_t d, double beta1, double beta2,
                                    double sigma_hat, double C3, double C4, double c1, double c2,
                                    double B, int32_t erm_free, anv_plan** out);

/* Builds a plan from key=value config text (same schema as the CLI fit
 * commands: regime, beta1, beta2, sigma_hat, C3, C4, c1, c2, depth, B) at
 * sample size n and ambient dimension d. */
ANV_API anv_status anv_plan_from_config(const char* config_text, int64_t n, int32_t d,
                                        anv_plan** out);

ANV_API anv_status anv_plan_describe(const anv_plan* p, char** json);

ANV_API void anv_plan_free(anv_plan* p);

/* ---- fitting ------------------------------------------------------------ */

typedef struct anv_opt {
  int32_t steps;
  int32_t restarts;
  double lr;
  int32_t cosine_decay; /* nonzero = cosine schedule */
  int32_t threads;
  uint64_t seed;
  double eps_norm;
} anv_opt;

ANV_API void anv_opt_default(anv_opt* opt);

/* Joint unpenalized least squares over the given slots. uni_keys lists
 * 1-based feature indices (n_uni entries); bi_pairs packs ordered pairs as
 * 2*n_bi ints. Passing n_uni = n_bi = 0 instantiates every slot. */
ANV_API anv_status anv_fit_erm(const anv_dataset* ds, const anv_plan* plan,
                               const int32_t* uni_keys, int32_t n_uni, const int32_t* bi_pairs,
                               int32_t n_bi, const anv_opt* opt, anv_fit** out);

/* Group-sparse penalized fit over every slot; the plan must carry positive
 * penalty levels. */
ANV_API anv_status anv_fit_penalized(const anv_dataset* ds, const anv_plan* plan,
                                     const anv_opt* opt, anv_fit** out);

ANV_API anv_status anv_fit_model(const anv_fit* fit, anv_model** out);

/* JSON summary: objective, training loss, component norm table, trace tail,
 * timing (zeroed when deterministic is nonzero). */
ANV_API anv_status anv_fit_summary(const anv_fit* fit, int32_t deterministic, char** json);

ANV_API void anv_fit_free(anv_fit* fit);

/* Residual scale estimate from a pilot ridge fit (MAD * 1.4826). */
ANV_API anv_status anv_sigma_hat(const anv_dataset* ds, double* out);

/* ---- screening pipeline -------------------------------------------------- */

/* Split, penalized fit, inclusive thresholding, restricted refit,
 * identifiability projection. */
ANV_API anv_status anv_pipeline_run(const anv_dataset* ds, const anv_plan* plan,
                                    const anv_opt* opt, anv_pipeline_result** out);

ANV_API anv_status anv_pipeline_record(const anv_pipeline_result* result, int32_t deterministic,
                                       char** json);

ANV_API anv_status anv_pipeline_final_model(const anv_pipeline_result* result, anv_model** out);

ANV_API void anv_pipeline_free(anv_pipeline_result* result);

/* ---- minimax lower-bound toolkit ----------------------------------------- */

/* Runs the packing verification suite driven by key=value config text (same
 * schema as the CLI lowerbound command); returns a JSON report with codebook
 * statistics and the maximum relative discrepancy between the closed-form and
 * quadrature packing distances. */
ANV_API anv_status anv_lowerbound_report(const char* config_text, char** json);

#ifdef __cplusplus
}
#endif

#endif /* ANOVANET_H */
