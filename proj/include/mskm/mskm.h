/* mskm: multistage k-means parcellation toolkit - C API.
 *
 * Conventions:
 *   - Every function returns an mskm_status; MSKM_OK is 0.
 *   - On failure, mskm_last_error() returns a thread-local message.
 *   - Objects come back through out-parameters as opaque handles and are
 *     released with the matching *_free function.
 *   - Strings and buffers returned through out-parameters are owned by the
 *     caller; release them with mskm_string_free / mskm_buffer_free.
 */
#ifndef MSKM_H
#define MSKM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MSKM_API __declspec(dllexport)
#else
#define MSKM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  MSKM_OK = 0,
  MSKM_ERR_INVALID_INPUT = 1,
  MSKM_ERR_EMPTY_INPUT = 2,
  MSKM_ERR_EMPTY_MASK = 3,
  MSKM_ERR_FORMAT = 4,
  MSKM_ERR_RESOURCE_LIMIT = 5,
  MSKM_ERR_IO = 6,
  MSKM_ERR_INTERNAL = 7
} mskm_status;

typedef struct mskm_volume mskm_volume;
typedef struct mskm_parcellation mskm_parcellation;

MSKM_API const char* mskm_version(void);
MSKM_API const char* mskm_status_name(mskm_status s);
/* Thread-local message for the most recent failure in this thread. */
MSKM_API const char* mskm_last_error(void);
MSKM_API void mskm_string_free(char* s);
MSKM_API void mskm_buffer_free(void* p);

/* ---- volumes (F4D container) ------------------------------------------- */

typedef struct {
  uint32_t nx, ny, nz, nt;
  float dx, dy, dz, tr;
  uint8_t kind; /* 0 = series, 1 = labels, 2 = mask */
} mskm_volume_info;

MSKM_API mskm_status mskm_volume_read(const char* path, mskm_volume** out);
MSKM_API mskm_status mskm_volume_write(const mskm_volume* v, const char* path);
MSKM_API mskm_status mskm_volume_get_info(const mskm_volume* v, mskm_volume_info* out);
/* Frame-major float32 payload; buffer must hold nx*ny*nz*nt floats. */
MSKM_API mskm_status mskm_volume_get_data(const mskm_volume* v, float* out, size_t capacity);
MSKM_API mskm_status mskm_volume_create(const mskm_volume_info* info, const float* data,
                                        size_t count, mskm_volume** out);
MSKM_API void mskm_volume_free(mskm_volume* v);

/* ---- synthetic data ----------------------------------------------------- */

/* spec_json may be NULL for defaults; see docs/FORMATS.md for the schema.
 * snr: sigma_signal / sigma_noise; pass INFINITY (or any non-finite value)
 * for noiseless output. Overrides the spec's value when > 0 or non-finite. */
MSKM_API mskm_status mskm_synth_grid(const char* spec_json, double snr, uint64_t seed,
                                     mskm_volume** out_data, mskm_volume** out_truth,
                                     char** out_sidecar_json);
MSKM_API mskm_status mskm_synth_task(const char* spec_json, uint64_t seed,
                                     mskm_volume** out_data, mskm_volume** out_truth,
                                     char** out_sidecar_json);

/* ---- preprocessing ------------------------------------------------------ */

typedef struct {
  double mask_threshold;
  double smooth_fwhm_mm;
  int detrend_poly_order;
  int regress_global; /* 0/1 */
  int regress_top_pcs;
  int threads; /* <= 0 means auto */
} mskm_preprocess_params;

MSKM_API void mskm_preprocess_params_init(mskm_preprocess_params* p);
MSKM_API mskm_status mskm_preprocess_run(const mskm_volume* in,
                                         const mskm_preprocess_params* params,
                                         mskm_volume** out_data, mskm_volume** out_mask,
                                         char** out_report_json);

/* ---- clustering ---------------------------------------------------------- */

typedef struct {
  double ct;        /* correlation threshold (multistage) */
  int ns;           /* stages (multistage) */
  int k;            /* cluster count (simple, hier) */
  int replicates;   /* k-means restarts */
  int max_iters;    /* Lloyd iteration cap */
  uint64_t seed;
  int threads;      /* <= 0 means auto */
  uint64_t hier_guard; /* max N for the hierarchical distance matrix */
} mskm_cluster_params;

MSKM_API void mskm_cluster_params_init(mskm_cluster_params* p);
/* algorithm: "multistage" | "simple" | "hier". mask may be NULL (all voxels). */
MSKM_API mskm_status mskm_cluster_run(const mskm_volume* data, const mskm_volume* mask,
                                      const char* algorithm,
                                      const mskm_cluster_params* params,
                                      mskm_parcellation** out);
MSKM_API mskm_status mskm_parcellation_get_k(const mskm_parcellation* p, uint32_t* out);
MSKM_API mskm_status mskm_parcellation_get_labels(const mskm_parcellation* p,
                                                  mskm_volume** out);
MSKM_API mskm_status mskm_parcellation_centroids_csv(const mskm_parcellation* p,
                                                     int header, char** out_csv);
/* Fails with MSKM_ERR_INVALID_INPUT when the parcellation has no tree. */
MSKM_API mskm_status mskm_parcellation_tree_json(const mskm_parcellation* p, char** out);
MSKM_API mskm_status mskm_parcellation_report_json(const mskm_parcellation* p, char** out);
MSKM_API void mskm_parcellation_free(mskm_parcellation* p);

/* ---- metrics ------------------------------------------------------------- */

MSKM_API mskm_status mskm_metrics_compare(const mskm_volume* a_labels,
                                          const mskm_volume* b_labels, char** out_json);
MSKM_API mskm_status mskm_metrics_intra(const mskm_volume* labels, const mskm_volume* data,
                                        char** out_json, char** out_csv);
MSKM_API mskm_status mskm_metrics_overlap(const mskm_volume* labels, const mskm_volume* gm,
                                          const mskm_volume* wm, char** out_json,
                                          char** out_csv);
MSKM_API mskm_status mskm_metrics_random_baseline(uint32_t nx, uint32_t ny, uint32_t nz,
                                                  uint32_t k, uint32_t trials, uint64_t seed,
                                                  char** out_json);

/* ---- hemodynamic response ------------------------------------------------ */

/* percent_change != 0 reports betas as 100 * beta / (cluster temporal mean)
 * instead of absolute signal units. */
MSKM_API mskm_status mskm_hrf_fit(const mskm_volume* labels, const mskm_volume* data,
                                  const uint32_t* onsets, size_t n_onsets, uint32_t lags,
                                  int intercept, int percent_change, char** out_json,
                                  char** out_csv);
/* tree_json may be NULL; secondary classification then stays empty. */
MSKM_API mskm_status mskm_hrf_rank(const mskm_volume* labels, const mskm_volume* data,
                                   const char* tree_json, const double* paradigm,
                                   size_t paradigm_len, double secondary_threshold,
                                   char** out_json);
/* Boxcar paradigm: 1.0 during [onset, onset + on_trs) for each onset. */
MSKM_API mskm_status mskm_paradigm_boxcar(uint32_t t_points, const uint32_t* onsets,
                                          size_t n_onsets, uint32_t on_trs, double** out,
                                          size_t* out_len);

/* ---- benchmarks ----------------------------------------------------------- */

MSKM_API mskm_status mskm_bench_predict(const char* algorithm, uint64_t n, uint64_t k,
                                        uint64_t r, uint64_t m, uint64_t ns, uint64_t* out);
MSKM_API mskm_status mskm_bench_scaling(const uint64_t* sizes, size_t n_sizes,
                                        uint32_t t_points, uint32_t repeats,
                                        const mskm_cluster_params* params, char** out_json,
                                        char** out_csv);
MSKM_API mskm_status mskm_bench_table(double snr, const double* ct_grid, size_t n_ct,
                                      const int32_t* ns_grid, size_t n_ns, uint32_t seeds,
                                      const mskm_cluster_params* params, char** out_json,
                                      char** out_csv);
MSKM_API mskm_status mskm_bench_smoothing(double snr, const double* fwhm_grid, size_t n_fwhm,
                                          uint32_t seeds, const mskm_cluster_params* params,
                                          char** out_json, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* MSKM_H */
