/* C interface to the kNN x KDE imputation library.
   Every handle is opaque. Functions returning kxk_status leave a
   thread-local message behind on failure, readable via kxk_last_error(). */
#ifndef KNNXKDE_H
#define KNNXKDE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(KXK_BUILDING_LIBRARY)
#    define KXK_API __declspec(dllexport)
#  else
#    define KXK_API __declspec(dllimport)
#  endif
#else
#  define KXK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kxk_status {
  KXK_OK = 0,
  KXK_ERR_INVALID_ARGUMENT = 1,
  KXK_ERR_PARSE = 2,
  KXK_ERR_DIMENSION = 3,
  KXK_ERR_IO = 4,
  KXK_ERR_EMPTY_DONORS = 5,
  KXK_ERR_NOT_IMPLEMENTED = 6,
  KXK_ERR_INTERNAL = 7
} kxk_status;

typedef struct kxk_matrix kxk_matrix;
typedef struct kxk_imputation kxk_imputation;

KXK_API const char* kxk_version(void);
/* Message of the last failure on this thread, "" if none. */
KXK_API const char* kxk_last_error(void);
KXK_API const char* kxk_status_name(kxk_status status);
/* IMPUTE_THREADS if set, else the hardware concurrency. */
KXK_API size_t kxk_default_threads(void);
/* Strings handed out by the library (JSON, CSV) are released here. */
KXK_API void kxk_string_free(char* s);

/* Matrices. Missing cells are NaN. */
KXK_API kxk_status kxk_matrix_load_csv(const char* path, kxk_matrix** out);
KXK_API kxk_status kxk_matrix_save_csv(const kxk_matrix* m, const char* path);
/* names may be NULL (x1..xD); values is row-major rows*cols. */
KXK_API kxk_status kxk_matrix_create(size_t rows, size_t cols, const double* values, const char* const* names,
                                     kxk_matrix** out);
KXK_API void kxk_matrix_free(kxk_matrix* m);
KXK_API size_t kxk_matrix_rows(const kxk_matrix* m);
KXK_API size_t kxk_matrix_cols(const kxk_matrix* m);
KXK_API double kxk_matrix_get(const kxk_matrix* m, size_t row, size_t col);
KXK_API const char* kxk_matrix_column_name(const kxk_matrix* m, size_t col);
KXK_API size_t kxk_matrix_missing_count(const kxk_matrix* m);

/* Synthetic data: 2d_linear, 2d_sine, 2d_ring, gaussians. manifest_json may be NULL. */
KXK_API kxk_status kxk_generate(const char* name, size_t n, uint64_t seed, kxk_matrix** out, char** manifest_json);

/* mechanism: full_mcar, mcar, mar, mnar. miss_col < 0 means the last
   column, cond_col < 0 means unset (MAR then fails). */
typedef struct kxk_scenario {
  const char* mechanism;
  double rate;
  long long miss_col;
  long long cond_col;
} kxk_scenario;

/* mask_csv (0/1, 1 = observed) may be NULL. */
KXK_API kxk_status kxk_ampute(const kxk_matrix* complete, const kxk_scenario* scenario, uint64_t seed,
                              kxk_matrix** amputed, char** mask_csv);

typedef struct kxk_impute_options {
  double inverse_tau;  /* 1/tau, default 50 */
  double h;            /* kernel bandwidth, default 0.03 */
  size_t n_draws;      /* default 10000 */
  const char* strategy; /* mean, median, mode, sample, sample_mean */
  uint64_t seed;
  size_t threads;      /* 0 = kxk_default_threads() */
  int retain_samples;  /* keep n_draws joint samples per incomplete row */
} kxk_impute_options;

KXK_API void kxk_impute_options_init(kxk_impute_options* options);
KXK_API kxk_status kxk_impute(const kxk_matrix* x, const kxk_impute_options* options, kxk_imputation** out);
/* Borrowed; lives as long as the imputation. */
KXK_API const kxk_matrix* kxk_imputation_matrix(const kxk_imputation* imp);
KXK_API size_t kxk_imputation_fallback_count(const kxk_imputation* imp);
KXK_API kxk_status kxk_imputation_distributions_json(const kxk_imputation* imp, char** out);
/* Requires retain_samples. */
KXK_API kxk_status kxk_imputation_write_samples_csv(const kxk_imputation* imp, const char* path);
KXK_API void kxk_imputation_free(kxk_imputation* imp);

/* Any method by name (knnxkde, knn, mice, softimpute, mean, median) on
   min-max normalized data, returned in original units. hyperparameter is
   1/tau, k or lambda and ignored otherwise. */
KXK_API kxk_status kxk_impute_method(const kxk_matrix* x, const char* method, double hyperparameter, uint64_t seed,
                                     size_t threads, kxk_matrix** out);

/* Column stats and pairwise-complete Pearson/Spearman as JSON. */
KXK_API kxk_status kxk_stats_json(const kxk_matrix* x, char** out);

/* Runs a benchmark described by a JSON config and writes scores.csv,
   grid.csv, ranks.csv and manifest.json into out_dir. Relative dataset
   paths resolve against base_dir (may be NULL). manifest_out may be NULL. */
KXK_API kxk_status kxk_benchmark_run(const char* config_json, const char* base_dir, const char* out_dir,
                                     size_t threads, char** manifest_out);

#ifdef __cplusplus
}
#endif

#endif
