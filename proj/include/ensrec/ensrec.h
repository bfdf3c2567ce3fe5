/*
 * ensrec C API.
 *
 * Every object is an opaque handle released with its matching *_free
 * function. Functions return an ensrec_status; on failure the message is
 * available from ensrec_last_error() until the next call on the same thread.
 * Strings returned through char** are released with ensrec_string_free().
 */
#ifndef ENSREC_ENSREC_H_
#define ENSREC_ENSREC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(ENSREC_BUILDING_LIBRARY)
#define ENSREC_API __declspec(dllexport)
#else
#define ENSREC_API __declspec(dllimport)
#endif
#else
#define ENSREC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ensrec_status {
  ENSREC_OK = 0,
  ENSREC_ERR_INVALID_ARGUMENT = 1, /* bad flag, precondition or contract */
  ENSREC_ERR_IO = 2,               /* file could not be opened or written */
  ENSREC_ERR_FORMAT = 3,           /* file contents violate the format */
  ENSREC_ERR_RUNTIME = 4,          /* computation failed */
} ensrec_status;

typedef struct ensrec_dataset ensrec_dataset;
typedef struct ensrec_splits ensrec_splits;
typedef struct ensrec_matrix ensrec_matrix;
typedef struct ensrec_weights ensrec_weights;

ENSREC_API const char* ensrec_last_error(void);
ENSREC_API const char* ensrec_version(void);
ENSREC_API void ensrec_string_free(char* s);

/* ---- interactions ------------------------------------------------------ */

typedef struct ensrec_load_options {
  const char* format;           /* "csv", "tsv" or a literal delimiter */
  int header;                   /* nonzero when the first line names columns */
  const char* user_column;      /* header name or 0-based index */
  const char* item_column;
  const char* rating_column;    /* NULL when absent */
  const char* timestamp_column; /* NULL when absent */
} ensrec_load_options;

ENSREC_API void ensrec_load_options_default(ensrec_load_options* options);
ENSREC_API ensrec_status ensrec_dataset_load(const char* path, const ensrec_load_options* options,
                                             ensrec_dataset** out);
ENSREC_API size_t ensrec_dataset_size(const ensrec_dataset* dataset);
ENSREC_API size_t ensrec_dataset_malformed_rows(const ensrec_dataset* dataset);
ENSREC_API void ensrec_dataset_free(ensrec_dataset* dataset);

/* ---- fold splits ------------------------------------------------------- */

typedef struct ensrec_split_options {
  int n_folds;
  double train, validation, test;
  uint64_t seed;
  int min_interactions;
} ensrec_split_options;

ENSREC_API void ensrec_split_options_default(ensrec_split_options* options);
ENSREC_API ensrec_status ensrec_splits_create(const ensrec_dataset* dataset,
                                              const ensrec_split_options* options,
                                              ensrec_splits** out);
/* Audit CSV `fold,user,item,subset`. */
ENSREC_API ensrec_status ensrec_splits_read(const char* path, ensrec_splits** out);
ENSREC_API ensrec_status ensrec_splits_write(const ensrec_splits* splits, const char* path);
ENSREC_API int ensrec_splits_fold_count(const ensrec_splits* splits);
ENSREC_API void ensrec_splits_free(ensrec_splits* splits);

/* ---- models and prediction matrices ------------------------------------ */

/*
 * models_json: JSON array of {"id", "kind", "nn", "k1", "b"} objects, kind one
 * of popularity, user-knn, item-knn, item-item-cosine, item-item-tfidf,
 * item-item-bm25. NULL selects the six built-in models.
 */

/* Fits every model on every fold and returns one CSV line per (fold, model):
 * `fold,model,kind,users,items,neighbors`. */
ENSREC_API ensrec_status ensrec_fit_summary(const ensrec_splits* splits, const char* models_json,
                                            int threads, char** out_csv);
ENSREC_API ensrec_status ensrec_matrix_generate(const ensrec_splits* splits,
                                                const char* models_json, int k_max, int threads,
                                                ensrec_matrix** out);
/* CSV `fold,model,user,item,score`. */
ENSREC_API ensrec_status ensrec_matrix_read(const char* path, ensrec_matrix** out);
ENSREC_API ensrec_status ensrec_matrix_write(const ensrec_matrix* matrix, const char* path);
/* mode: "global-minmax" or "per-user-minmax". */
ENSREC_API ensrec_status ensrec_matrix_normalize(const ensrec_matrix* matrix, const char* mode,
                                                 ensrec_matrix** out);
ENSREC_API size_t ensrec_matrix_model_count(const ensrec_matrix* matrix);
ENSREC_API const char* ensrec_matrix_model_id(const ensrec_matrix* matrix, size_t index);
ENSREC_API void ensrec_matrix_free(ensrec_matrix* matrix);

/* ---- weights, fusion, selection ---------------------------------------- */

ENSREC_API ensrec_status ensrec_weights_compute(const ensrec_matrix* matrix,
                                                const ensrec_splits* splits, int n,
                                                int include_empty_holdout_users,
                                                ensrec_weights** out);
/* CSV `fold,model,n,weight`. */
ENSREC_API ensrec_status ensrec_weights_read(const char* path, ensrec_weights** out);
ENSREC_API ensrec_status ensrec_weights_write(const ensrec_weights* weights, const char* path);
ENSREC_API void ensrec_weights_free(ensrec_weights* weights);

/* Fuses `members` ('+'-joined model ids) for every user of `fold` and writes
 * the top-n lists in the prediction-matrix layout, model column = members.
 * The matrix is used as given, so normalize it first. */
ENSREC_API ensrec_status ensrec_fuse_write(const ensrec_matrix* matrix,
                                           const ensrec_weights* weights, const char* members,
                                           int fold, int k, int n, const char* path);

typedef struct ensrec_select_options {
  const char* mode;  /* "greedy" or "exhaustive" */
  const char* split; /* "validation" or "paper-faithful" */
  const char* scope; /* "per-fold" or "fixed-subset" */
  int k;
  int n;
  int threads;
  int include_empty_holdout_users;
} ensrec_select_options;

ENSREC_API void ensrec_select_options_default(ensrec_select_options* options);
/* Runs selection on every fold and writes the trace CSV
 * `mode,fold,members,k,n,split,ndcg`. When chosen_csv is not NULL it receives
 * `fold,members,selection_ndcg,test_ndcg` lines. The matrix is normalized
 * internally with normalization (NULL = global-minmax). */
ENSREC_API ensrec_status ensrec_select_write(const ensrec_matrix* matrix,
                                             const ensrec_splits* splits,
                                             const char* normalization,
                                             const ensrec_select_options* options,
                                             const char* trace_path, char** chosen_csv);

/* ---- experiments ------------------------------------------------------- */

/* parts: "all", "report" or "sweep". output_dir NULL uses the config's.
 * Returns ENSREC_ERR_RUNTIME when any cell failed; the bundle is still
 * written. */
ENSREC_API ensrec_status ensrec_experiment_run(const char* config_path, const char* parts,
                                               int threads, const char* output_dir);
/* Validates a config file without running it. */
ENSREC_API ensrec_status ensrec_config_check(const char* config_path);

#ifdef __cplusplus
}
#endif

#endif /* ENSREC_ENSREC_H_ */
