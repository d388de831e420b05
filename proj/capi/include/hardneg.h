#ifndef HARDNEG_H
#define HARDNEG_H

/* C interface to the hard-negative contrastive learning laboratory.
 *
 * Conventions:
 *   - Every fallible call returns an hn_status; HN_OK means success and any
 *     other value leaves all output parameters untouched.
 *   - On failure, hn_last_error() returns a message describing what went
 *     wrong. The pointer stays valid until the next library call on the
 *     same thread.
 *   - Strings handed out through char** are heap copies owned by the
 *     caller; release them with hn_string_free. Never free them with your
 *     own allocator.
 *   - Handles (hn_model, hn_population) are opaque; release them with the
 *     matching *_free function. A NULL handle argument is a usage error.
 *   - All functions are thread-safe as long as a handle is not mutated and
 *     freed concurrently; the library keeps no global mutable state apart
 *     from the per-thread error slot.
 */

#include <stdint.h>

#if defined(_WIN32)
#define HN_API __declspec(dllexport)
#else
#define HN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hn_status {
  HN_OK = 0,
  HN_INVALID_CONFIG,
  HN_DEGENERATE_INPUT,
  HN_SHAPE,
  HN_INVALID_BATCH,
  HN_INVALID_DISTRIBUTION,
  HN_EMPTY_SUPPORT,
  HN_BOUND_INVALID,
  HN_HYPOTHESIS_VIOLATION,
  HN_USAGE,
  HN_IO,
  HN_CHECK_FAILED,
  HN_INTERNAL
} hn_status;

/* Library version, e.g. "1.0.0". Static storage; do not free. */
HN_API const char* hn_version(void);

/* Stable kebab-case name of a status code, e.g. "invalid-config". */
HN_API const char* hn_status_name(hn_status status);

/* Message of the most recent failure on this thread; empty after success. */
HN_API const char* hn_last_error(void);

/* Release a string returned through a char** output parameter. */
HN_API void hn_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Scalar losses and closed-form quantities                           */
/* ------------------------------------------------------------------ */

/* Mirror of the loss configuration. has_* fields gate the optional parts:
 * q defaults to n, clip to "no clipping", estimator_floor to exp(-1/t^2). */
typedef struct hn_loss_config {
  double beta;      /* concentration of the tilted negative distribution */
  double tau_plus;  /* class prior of false negatives, in [0, 1) */
  int n;            /* negative count; must match the score array */
  int m;            /* positive-sample count for the tau_plus correction */
  int has_q;
  double q;         /* loss weighting override */
  double t;         /* temperature > 0 */
  int has_clip;
  double clip_lo;
  double clip_hi;
  int has_floor;
  double estimator_floor;
} hn_loss_config;

/* Fill a config with the defaults (beta 0, tau_plus 0, n 1, m 1, t 1,
 * no q / clip / floor overrides). */
HN_API void hn_loss_config_init(hn_loss_config* cfg);

/* -log( e^{s_pos} / (e^{s_pos} + (q/n) * sum_i e^{s_i}) ). */
HN_API hn_status hn_nce_loss(double s_pos, const double* s_negs, int num_negs,
                             const hn_loss_config* cfg, double* out_loss);

/* Debiased contrastive loss: the false-negative mass tau_plus is subtracted
 * out of the negative expectation before weighting. */
HN_API hn_status hn_debiased_loss(double s_pos, const double* s_pos_samples, int num_pos_samples,
                                  const double* s_negs, int num_negs, const hn_loss_config* cfg,
                                  double* out_loss);

/* Hardness-biased debiased loss: negatives are reweighted toward high
 * scores by beta via self-normalized importance weights. */
HN_API hn_status hn_hard_loss(double s_pos, const double* s_pos_samples, int num_pos_samples,
                              const double* s_negs, int num_negs, const hn_loss_config* cfg,
                              double* out_loss);

/* Stepwise-decreasing concentration schedule from beta0 down to beta0/ell
 * on the final of ell equal segments. epoch is 0-based and < epochs. */
HN_API hn_status hn_anneal_beta(double beta0, int ell, int epochs, int epoch, double* out_beta);

/* Misclassification bound 8 eps / (xi^2 - 2 c (1 + 1/t) sqrt(eps))^2; fails
 * with HN_BOUND_INVALID when the denominator is not positive. */
HN_API hn_status hn_generalization_bound(double epsilon, double xi, int num_classes, double t,
                                         double* out_bound);

/* ------------------------------------------------------------------ */
/* Run configuration                                                  */
/* ------------------------------------------------------------------ */

/* Canonical JSON configuration document with every field at its default;
 * sections: loss, train, data. */
HN_API hn_status hn_default_config(char** out_json);

/* Resolve a configuration: defaults, overlaid with base_json (NULL for
 * none; may be a partial document), then with dotted-path assignments of
 * the form "section.key=value" where value is a JSON literal. The result
 * is the full document. Unknown sections, keys, or paths fail with
 * HN_INVALID_CONFIG. */
HN_API hn_status hn_resolve_config(const char* base_json, const char* const* dotted_sets,
                                   int num_sets, char** out_json);

/* ------------------------------------------------------------------ */
/* Models and training                                                */
/* ------------------------------------------------------------------ */

typedef struct hn_model hn_model;

/* Train an encoder on the synthetic data described by config_json (a full
 * or partial configuration document). Returns the trained model and the
 * epoch history as CSV "epoch,loss,accuracy". Either output pointer may be
 * NULL if not wanted. */
HN_API hn_status hn_train(const char* config_json, hn_model** out_model, char** out_history_csv);

/* Serialize / restore a model. The JSON carries layer dims, temperature,
 * and a flat parameter array; round trips are bitwise. */
HN_API hn_status hn_model_from_json(const char* text, hn_model** out_model);
HN_API hn_status hn_model_to_json(const hn_model* model, char** out_json);

/* Sphere temperature of the model's embeddings; 0 for NULL. */
HN_API double hn_model_temperature(const hn_model* model);
/* Input / embedding dimensions; 0 for NULL. */
HN_API int hn_model_input_dim(const hn_model* model);
HN_API int hn_model_embed_dim(const hn_model* model);

HN_API void hn_model_free(hn_model* model);

/* ------------------------------------------------------------------ */
/* Populations                                                        */
/* ------------------------------------------------------------------ */

typedef struct hn_population hn_population;

/* Sample a labeled raw-input population of the given size from the data
 * section of config_json; uniform base weights, every class represented. */
HN_API hn_status hn_population_generate(const char* config_json, int size, uint64_t seed,
                                        hn_population** out_pop);

/* Parse / emit the CSV exchange format "label,x_0,...,x_{d-1}" with a
 * one-line header. t is the temperature attached to the raw points. */
HN_API hn_status hn_population_from_csv(const char* csv_text, double t, hn_population** out_pop);
HN_API hn_status hn_population_to_csv(const hn_population* pop, char** out_csv);

/* Point count / input dimension; 0 for NULL. */
HN_API int hn_population_size(const hn_population* pop);
HN_API int hn_population_dim(const hn_population* pop);

HN_API void hn_population_free(hn_population* pop);

/* ------------------------------------------------------------------ */
/* Analysis entry points                                              */
/* ------------------------------------------------------------------ */

/* Embed a population with the model and histogram the pairwise scores of
 * same-label and different-label pairs over `bins` uniform bins spanning
 * [-1/t^2, 1/t^2]. out_csv receives "bin_lo,bin_hi,same_count,diff_count"
 * rows; out_intersection (optional) receives the overlap of the two
 * normalized histograms, or NaN when one side has no pairs at all. */
HN_API hn_status hn_histogram(const hn_model* model, const hn_population* pop, int bins,
                              char** out_csv, double* out_intersection);

/* JSON array of the available verification suite names. */
HN_API hn_status hn_suite_names(char** out_json);

/* Run one verification suite. beta_grid may be NULL (default grid
 * 0,1,10,100); pop_size and classes <= 0 pick the defaults (60, 4).
 * out_pass receives 1 when every check in the suite met its tolerance.
 * Evidence is the suite's CSV table; the summary is a small JSON object
 * with the suite name, outcome, worst value, and tolerance. Unknown suite
 * names fail with HN_USAGE. Any output pointer may be NULL. */
HN_API hn_status hn_verify_suite(const char* suite, uint64_t seed, const double* beta_grid,
                                 int grid_len, int pop_size, int classes, int* out_pass,
                                 char** out_evidence_csv, char** out_summary_json);

/* Best packing of num_classes prototypes on the radius-1/t sphere in R^dim
 * over `restarts` seeded starts. rho may be NULL for a uniform prior.
 * The JSON report carries the objective, the prototypes, and the seed. */
HN_API hn_status hn_tammes(int num_classes, int dim, double t, const double* rho, int restarts,
                           int iters, uint64_t seed, char** out_json);

/* Misclassification-bound experiment. With explicit_configs_json == NULL,
 * runs `configs` seeded perturbed-packing configurations; otherwise the
 * JSON array of {classes, dim, sigma, rho} objects is run instead, and
 * entries violating the bound's hypotheses (non-uniform rho) are skipped
 * with a warning rather than failing the run. out_reports_json receives
 * the JSON array of reports, out_warnings_json a JSON array of warning
 * strings, and out_all_hold 1 iff the bound held in every configuration
 * with a valid denominator. Any output pointer may be NULL. */
HN_API hn_status hn_bound_run(int configs, uint64_t seed, const char* explicit_configs_json,
                              char** out_reports_json, char** out_warnings_json,
                              int* out_all_hold);

/* Run-manifest document {"command", "config", "seed", "outputs",
 * "outcome"}; config_json must parse as JSON and outcome must be one of
 * pass | fail | usage-error. */
HN_API hn_status hn_manifest(const char* command, const char* config_json, uint64_t seed,
                             const char* const* outputs, int num_outputs, const char* outcome,
                             char** out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HARDNEG_H */
