/* C interface to the waveformer library.
 *
 * All entry points return a wf_status: 0 on success, 1 on usage errors,
 * 2 on I/O errors, 3 on numeric failures. wf_last_error() returns a
 * thread-local message for the most recent failure.
 */
#ifndef WAVEFORMER_H
#define WAVEFORMER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t wf_status;

#define WF_OK 0
#define WF_ERR_USAGE 1
#define WF_ERR_IO 2
#define WF_ERR_NUMERIC 3

const char* wf_version(void);
const char* wf_last_error(void);

/* Generate a ground-truth dataset.
 *   pde:     burgers | ks | allen-cahn | navier-stokes
 *   preset:  desk | paper
 *   options: NULL or "key=value\n..." overrides; recognized keys:
 *            bc (burgers: dirichlet|periodic), grid (comma extents),
 *            steps (stored frames). */
wf_status wf_generate(const char* pde, int64_t samples, uint64_t seed,
                      const char* preset, const char* options,
                      const char* out_path);

/* Train a model on a dataset file; writes the best-validation checkpoint.
 * metrics_csv may be NULL. */
wf_status wf_train(const char* model_kind, const char* data_path,
                   const char* config_path, const char* ckpt_path,
                   const char* metrics_csv);

/* Autoregressive prediction from the first k+1 frames of each sample in
 * data_path; writes a dataset of `steps` predicted frames. */
wf_status wf_predict(const char* ckpt_path, const char* data_path, int64_t steps,
                     const char* out_path);

/* Per-step relative MSE of predictions vs truth, split at `boundary`
 * (absolute frame index); writes CSV rows step,model,relative_mse,region. */
wf_status wf_evaluate(const char* pred_path, const char* truth_path,
                      int64_t boundary, const char* csv_path);

/* Region comparison across models from evaluate CSVs. */
wf_status wf_compare(const char* const* csv_paths, int64_t count,
                     const char* out_path);

/* Fast invariant suite (filters, transforms, attention, autodiff, RNG). */
wf_status wf_selftest(void);

/* ---- opaque handles ---- */

typedef struct wf_dataset wf_dataset;

wf_status wf_dataset_open(const char* path, wf_dataset** out);
void wf_dataset_close(wf_dataset* ds);
int64_t wf_dataset_samples(const wf_dataset* ds);
int64_t wf_dataset_timesteps(const wf_dataset* ds);
int64_t wf_dataset_dim(const wf_dataset* ds);
int64_t wf_dataset_extent(const wf_dataset* ds, int axis);
double wf_dataset_dt(const wf_dataset* ds);
const char* wf_dataset_pde(const wf_dataset* ds);
/* Copies one frame into buf (buflen doubles; must cover the grid). */
wf_status wf_dataset_frame(const wf_dataset* ds, int64_t sample, int64_t t,
                           double* buf, int64_t buflen);

typedef struct wf_model wf_model;

wf_status wf_model_load(const char* ckpt_path, wf_model** out);
void wf_model_close(wf_model* m);
const char* wf_model_kind(const wf_model* m);
int64_t wf_model_param_count(const wf_model* m);
int64_t wf_model_history(const wf_model* m);
/* history: (k+1) * prod(extents) doubles; out: steps * prod(extents). */
wf_status wf_model_rollout(const wf_model* m, const double* history,
                           const int64_t* extents, int64_t dim, int64_t steps,
                           double* out);

#ifdef __cplusplus
}
#endif

#endif /* WAVEFORMER_H */
