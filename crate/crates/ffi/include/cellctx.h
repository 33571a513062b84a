#ifndef CELLCTX_H
#define CELLCTX_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CellctxCorrection {
  CELLCTX_CORRECTION_NONE = 0,
  CELLCTX_CORRECTION_BORDER = 1,
} CellctxCorrection;

typedef enum CellctxDtype {
  CELLCTX_DTYPE_U8 = 0,
  CELLCTX_DTYPE_F32 = 1,
} CellctxDtype;

typedef enum CellctxStatus {
  CELLCTX_STATUS_OK = 0,
  CELLCTX_STATUS_NULL_POINTER = 1,
  CELLCTX_STATUS_INVALID_ARGUMENT = 2,
  CELLCTX_STATUS_PARSE = 3,
  CELLCTX_STATUS_INCONSISTENT = 4,
  CELLCTX_STATUS_DOMAIN = 5,
  CELLCTX_STATUS_IO = 6,
  CELLCTX_STATUS_BUFFER_SIZE = 7,
  CELLCTX_STATUS_PANIC = 8,
} CellctxStatus;

typedef struct CellctxPattern CellctxPattern;

typedef struct CellctxPredictions CellctxPredictions;

typedef struct CellctxRaster CellctxRaster;

typedef struct CellctxPrediction {
  double x;
  double y;
  uint32_t class_id;
  size_t size;
} CellctxPrediction;

typedef struct CellctxScores {
  size_t tp;
  size_t fp;
  size_t fn_count;
  double precision;
  double recall;
  double f1;
} CellctxScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cellctx_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *cellctx_last_error(void);

/**
 * Build a labelled pattern from `n` coordinates and class ids.
 *
 * # Safety
 * `xs`, `ys` and `labels` must each point to `n` readable values; `out`
 * must be writable.
 */
enum CellctxStatus cellctx_pattern_new(const double *xs,
                                       const double *ys,
                                       const uint32_t *labels,
                                       size_t n,
                                       double x0,
                                       double y0,
                                       double width,
                                       double height,
                                       size_t n_classes,
                                       struct CellctxPattern **out);

/**
 * # Safety
 * `pattern` must be NULL or a handle from `cellctx_pattern_new` not yet freed.
 */
void cellctx_pattern_free(struct CellctxPattern *pattern);

/**
 * Number of points, or 0 for NULL.
 *
 * # Safety
 * `pattern` must be NULL or a live handle.
 */
size_t cellctx_pattern_len(const struct CellctxPattern *pattern);

/**
 * Per-cell K-vectors, row-major: row `i` holds `n_classes * n_radii`
 * values ordered class-major. `out_len` must equal `len * n_classes * n_radii`.
 *
 * # Safety
 * `radii` must hold `n_radii` values and `out` `out_len` writable values.
 */
enum CellctxStatus cellctx_kvector_field(const struct CellctxPattern *pattern,
                                         const double *radii_ptr,
                                         size_t n_radii,
                                         double patch_size,
                                         double n_max,
                                         size_t workers,
                                         double *out,
                                         size_t out_len);

/**
 * Population K (or cross-K) at each radius, written to `out[n_radii]`.
 *
 * # Safety
 * `radii` and `out` must each hold `n_radii` values.
 */
enum CellctxStatus cellctx_ripley_k(const struct CellctxPattern *pattern,
                                    size_t source_class,
                                    size_t target_class,
                                    const double *radii_ptr,
                                    size_t n_radii,
                                    enum CellctxCorrection edge,
                                    double *out);

/**
 * Rank envelope of K under complete spatial randomness. Runs on the global
 * thread pool; results do not depend on its size.
 *
 * # Safety
 * `radii`, `lower` and `upper` must each hold `n_radii` values.
 */
enum CellctxStatus cellctx_csr_envelope(const struct CellctxPattern *pattern,
                                        size_t source_class,
                                        size_t target_class,
                                        const double *radii_ptr,
                                        size_t n_radii,
                                        size_t n_simulations,
                                        size_t rank,
                                        uint64_t seed,
                                        enum CellctxCorrection edge,
                                        double *lower,
                                        double *upper);

/**
 * Dilated single-channel u8 detection mask.
 *
 * # Safety
 * `pattern` must be a live handle and `out` writable.
 */
enum CellctxStatus cellctx_detection_mask(const struct CellctxPattern *pattern,
                                          size_t height,
                                          size_t width,
                                          uint32_t max_halfwidth,
                                          uint32_t min_gap,
                                          struct CellctxRaster **out);

/**
 * One u8 channel per class, from a detection mask.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum CellctxStatus cellctx_class_masks(const struct CellctxPattern *pattern,
                                       const struct CellctxRaster *detection,
                                       struct CellctxRaster **out);

/**
 * Per-pixel K-vector map (f32) and its validity mask (u8).
 *
 * # Safety
 * Handles must be live, `radii` must hold `n_radii` values, and both
 * outputs must be writable.
 */
enum CellctxStatus cellctx_kvector_map(const struct CellctxPattern *pattern,
                                       const struct CellctxRaster *detection,
                                       const double *radii_ptr,
                                       size_t n_radii,
                                       double patch_size,
                                       double n_max,
                                       size_t workers,
                                       struct CellctxRaster **out_map,
                                       struct CellctxRaster **out_valid);

/**
 * Wrap a channel-last u8 buffer of `height * width * channels` bytes.
 *
 * # Safety
 * `data` must hold that many bytes; `out` must be writable.
 */
enum CellctxStatus cellctx_raster_from_u8(const uint8_t *data,
                                          size_t height,
                                          size_t width,
                                          size_t channels,
                                          struct CellctxRaster **out);

/**
 * Wrap a channel-last f32 buffer of `height * width * channels` values.
 *
 * # Safety
 * `data` must hold that many values; `out` must be writable.
 */
enum CellctxStatus cellctx_raster_from_f32(const float *data,
                                           size_t height,
                                           size_t width,
                                           size_t channels,
                                           struct CellctxRaster **out);

/**
 * Shape and element type of a raster.
 *
 * # Safety
 * `raster` must be live; each output pointer must be writable or NULL.
 */
enum CellctxStatus cellctx_raster_info(const struct CellctxRaster *raster,
                                       size_t *height,
                                       size_t *width,
                                       size_t *channels,
                                       enum CellctxDtype *dtype);

/**
 * Copy a u8 raster's payload into `out[out_len]`.
 *
 * # Safety
 * `out` must hold `out_len` writable bytes.
 */
enum CellctxStatus cellctx_raster_copy_u8(const struct CellctxRaster *raster,
                                          uint8_t *out,
                                          size_t out_len);

/**
 * Copy an f32 raster's payload into `out[out_len]`.
 *
 * # Safety
 * `out` must hold `out_len` writable values.
 */
enum CellctxStatus cellctx_raster_copy_f32(const struct CellctxRaster *raster,
                                           float *out,
                                           size_t out_len);

/**
 * # Safety
 * `file` must be a NUL-terminated path; `out` must be writable.
 */
enum CellctxStatus cellctx_raster_load(const char *file, struct CellctxRaster **out);

/**
 * # Safety
 * `raster` must be live; `file` must be a NUL-terminated path.
 */
enum CellctxStatus cellctx_raster_save(const struct CellctxRaster *raster, const char *file);

/**
 * # Safety
 * `raster` must be NULL or a live handle.
 */
void cellctx_raster_free(struct CellctxRaster *raster);

/**
 * Threshold a likelihood map into predicted cells.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum CellctxStatus cellctx_extract_cells(const struct CellctxRaster *likelihood,
                                         const struct CellctxRaster *class_map,
                                         double threshold,
                                         size_t min_size,
                                         struct CellctxPredictions **out);

/**
 * # Safety
 * `preds` must be NULL or a live handle.
 */
size_t cellctx_predictions_len(const struct CellctxPredictions *preds);

/**
 * # Safety
 * `preds` must be live and `out` writable.
 */
enum CellctxStatus cellctx_predictions_get(const struct CellctxPredictions *preds,
                                           size_t index,
                                           struct CellctxPrediction *out);

/**
 * # Safety
 * `preds` must be NULL or a live handle.
 */
void cellctx_predictions_free(struct CellctxPredictions *preds);

/**
 * Match `n_preds` predictions against a ground-truth pattern. `per_class`
 * must hold one entry per ground-truth class.
 *
 * # Safety
 * `pred_xs`, `pred_ys` and `pred_classes` must hold `n_preds` values,
 * `detection` must be writable and `per_class` must hold `n_per_class`
 * writable entries.
 */
enum CellctxStatus cellctx_evaluate(const double *pred_xs,
                                    const double *pred_ys,
                                    const uint32_t *pred_classes,
                                    size_t n_preds,
                                    const struct CellctxPattern *ground_truth,
                                    double radius,
                                    struct CellctxScores *detection,
                                    struct CellctxScores *per_class,
                                    size_t n_per_class);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CELLCTX_H */
