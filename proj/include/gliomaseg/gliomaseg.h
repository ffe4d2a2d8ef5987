#ifndef GLIOMASEG_H
#define GLIOMASEG_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(GLIOMASEG_BUILDING)
#    define GS_API __declspec(dllexport)
#  else
#    define GS_API __declspec(dllimport)
#  endif
#else
#  define GS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. GS_OK is 0; every failure returns a positive code whose name
   gs_status_name() reports and whose message gs_last_error_message() holds
   for the calling thread. */
typedef enum gs_status {
  GS_OK = 0,
  GS_BAD_MAGIC,
  GS_UNSUPPORTED_DATATYPE,
  GS_UNSUPPORTED_LAYOUT,
  GS_TRUNCATED_PAYLOAD,
  GS_NON_FINITE_VOXEL,
  GS_SIDECAR_PARSE,
  GS_LENGTH_MISMATCH,
  GS_IO_FAILURE,
  GS_MISSING_MODALITY,
  GS_DIMS_MISMATCH,
  GS_UNKNOWN_LABEL_VALUE,
  GS_GRID_MISMATCH,
  GS_MISSING_PREDICTION,
  GS_CHECKPOINT_MISMATCH,
  GS_RECORD_MISMATCH,
  GS_EMPTY_BOX,
  GS_DATA_ERROR,
  GS_CONFIG_ERROR,
  GS_NON_POSITIVE_SIGMA,
  GS_NON_POSITIVE_MAGNITUDE,
  GS_BAD_VARIANT_ID,
  GS_UNSUPPORTED_KERNEL,
  GS_INDIVISIBLE_DIMS,
  GS_PATCH_LARGER_THAN_VOLUME,
  GS_SHAPE_MISMATCH,
  GS_DOMAIN_ERROR,
  GS_NON_SCALAR_LOSS,
  GS_DEGENERATE_SPATIAL,
  GS_NUMERIC_FAILURE,
  GS_INVALID_ARGUMENT = 100,
  GS_INTERNAL = 101
} gs_status;

/* "ConfigError", "DataError", ... for a status; "Ok" for GS_OK. */
GS_API const char* gs_status_name(int status);
/* Process exit code for a status: 0 ok, 2 configuration, 3 data, 4 numeric. */
GS_API int gs_exit_code(int status);
/* Last failure on this thread. */
GS_API int gs_last_error(void);
GS_API const char* gs_last_error_message(void);

/* Strings returned through char** out-parameters are owned by the caller. */
GS_API void gs_free_string(char* s);

/* Bounds OpenMP and BLAS worker threads; n <= 0 keeps the defaults. */
GS_API int gs_set_threads(int n);

/* ---- configuration ---------------------------------------------------- */

typedef struct gs_config gs_config;

/* `source` is a preset name ("toy", "paper") or a JSON config file path.
   Overrides are "dotted.key=value" strings, value parsed as JSON or taken as
   a string. */
GS_API int gs_config_create(const char* source, const char* const* overrides, size_t n_overrides, gs_config** out);
GS_API int gs_config_json(const gs_config* config, char** out_json);
GS_API void gs_config_free(gs_config* config);

/* ---- volumes ---------------------------------------------------------- */

typedef struct gs_volume gs_volume;

/* ".nii" reads NIfTI-1, anything else the raw payload with its .json sidecar. */
GS_API int gs_volume_read(const char* path, gs_volume** out);
GS_API int gs_volume_write(const gs_volume* volume, const char* path);
/* Copies nx*ny*nz float32 values, x fastest. */
GS_API int gs_volume_create(int nx, int ny, int nz, const float* data, gs_volume** out);
GS_API int gs_volume_dims(const gs_volume* volume, int dims[3]);
GS_API const float* gs_volume_data(const gs_volume* volume);
GS_API void gs_volume_free(gs_volume* volume);

/* ---- models ----------------------------------------------------------- */

typedef struct gs_model gs_model;

GS_API int gs_model_load(const char* checkpoint, gs_model** out);
/* JSON with the architecture, widths and parameter count. */
GS_API int gs_model_info(const gs_model* model, char** out_json);
/* input is (n, x, y, z, channels) float32 with channels fastest; probs
   receives n*x*y*z*classes values in the same layout. */
GS_API int gs_model_forward(const gs_model* model, const float* input, const int shape[5], float* probs,
                            size_t probs_len);
GS_API void gs_model_free(gs_model* model);

/* ---- pipeline --------------------------------------------------------- */

/* Writes the phantom set described by the config; returns the manifest path. */
GS_API int gs_phantom(const gs_config* config, const char* out_dir, char** out_manifest);
/* Train/validation case split for a manifest, as JSON. */
GS_API int gs_split(const gs_config* config, const char* manifest, char** out_json);
GS_API int gs_train_binary(const gs_config* config, const char* manifest, const char* out_dir, char** out_json);
/* binary_checkpoint may be NULL (ROI from ground-truth labels). */
GS_API int gs_train_multiclass(const gs_config* config, const char* manifest, const char* binary_checkpoint,
                               const char* out_dir, char** out_json);
/* binary_checkpoint NULL segments whole grids. case_ids NULL predicts every
   manifest case. */
GS_API int gs_predict(const gs_config* config, const char* manifest, const char* binary_checkpoint,
                      const char* multiclass_checkpoint, const char* out_dir, const char* const* case_ids,
                      size_t n_cases, char** out_json);
GS_API int gs_evaluate(const char* manifest, const char* predictions_dir, const char* const* case_ids, size_t n_cases,
                       char** out_json);
/* report_json is the text produced by gs_evaluate. */
GS_API int gs_report(const char* manifest, const char* predictions_dir, const char* report_json, const char* out_dir,
                     char** out_json);
GS_API int gs_gradcheck(char** out_json);

#ifdef __cplusplus
}
#endif

#endif
