#ifndef GHOSTSIM_H
#define GHOSTSIM_H

/* Generated by cbindgen from the ghostsim-ffi sources. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Speckle intensities uniform on [0, 1).
 */
#define GS_DIST_UNIFORM01 0

/**
 * Speckle intensities 0 or 1 with equal probability.
 */
#define GS_DIST_BINARY 1

/**
 * Result code of every fallible call. On anything other than `Ok` the
 * thread's last error message is set.
 */
typedef enum {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_INVALID_ARGUMENT = 2,
  GS_STATUS_DIMENSION_MISMATCH = 3,
  /**
   * Correlation or reconstruction is undefined for the input.
   */
  GS_STATUS_NUMERIC = 4,
  GS_STATUS_CORRUPT_DATA = 5,
  GS_STATUS_FORMAT = 6,
  GS_STATUS_IO = 7,
  GS_STATUS_PANIC = 99,
} GsStatus;

/**
 * Batches of frames from a rotation simulation or a container.
 */
typedef struct GsBatches GsBatches;

typedef struct GsContainer GsContainer;

typedef struct GsGroupFrame GsGroupFrame;

typedef struct GsImage GsImage;

typedef struct GsMerged GsMerged;

typedef struct GsSpeckleSet GsSpeckleSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Releases the handle; null is ignored.
 */
void gs_image_free(GsImage *handle);

/**
 * Releases the handle; null is ignored.
 */
void gs_speckle_set_free(GsSpeckleSet *handle);

/**
 * Releases the handle; null is ignored.
 */
void gs_group_frame_free(GsGroupFrame *handle);

/**
 * Releases the handle; null is ignored.
 */
void gs_batches_free(GsBatches *handle);

/**
 * Releases the handle; null is ignored.
 */
void gs_merged_free(GsMerged *handle);

/**
 * Releases the handle; null is ignored.
 */
void gs_container_free(GsContainer *handle);

/**
 * Copies `height * width` values from `data` into a new image.
 */
GsStatus gs_image_new(size_t height, size_t width, const double *data, GsImage **out);

GsStatus gs_image_dims(const GsImage *image, size_t *height, size_t *width);

/**
 * Borrowed pointer to the pixels; valid until the image is freed. Null for
 * a null handle.
 */
const double *gs_image_data(const GsImage *image);

/**
 * Counterclockwise rotation about the image center, bilinear, zero fill.
 */
GsStatus gs_image_rotate(const GsImage *image, double angle_deg, GsImage **out);

/**
 * Binary image of a digit drawn on a `size` by `size` grid.
 */
GsStatus gs_phantom_digit(uint8_t digit, size_t size, GsImage **out);

/**
 * Reads a binary PGM with values scaled to [0, 1].
 */
GsStatus gs_pgm_read(const char *file, GsImage **out);

/**
 * Writes an 8-bit binary PGM after min-max normalization.
 */
GsStatus gs_pgm_write(const GsImage *image, const char *file);

GsStatus gs_speckle_set_generate(uint64_t seed,
                                 size_t count,
                                 size_t height,
                                 size_t width,
                                 uint32_t dist,
                                 GsSpeckleSet **out);

GsStatus gs_speckle_set_len(const GsSpeckleSet *set, size_t *len);

/**
 * Simulates bucket measurements of `object` under every pattern of `set`.
 */
GsStatus gs_group_frame_simulate(const GsImage *object,
                                 const GsSpeckleSet *set,
                                 GsGroupFrame **out);

GsStatus gs_group_frame_len(const GsGroupFrame *frame, size_t *len);

/**
 * Copies the bucket values into `buckets`, which must hold exactly
 * `gs_group_frame_len` values.
 */
GsStatus gs_group_frame_buckets(const GsGroupFrame *frame, double *buckets, size_t len);

/**
 * Correlation image of `set` against `count` bucket values.
 */
GsStatus gs_gi(const GsSpeckleSet *set, const double *buckets, size_t count, GsImage **out);

/**
 * Correlation image computed plane by plane from a group frame.
 */
GsStatus gs_gi_from_gf(const GsGroupFrame *frame, GsImage **out);

/**
 * PSNR in dB of inputs already on the [0, 255] scale. Identical images give
 * positive infinity.
 */
GsStatus gs_psnr(const GsImage *reference, const GsImage *test, double *out);

/**
 * SSIM of inputs already on the [0, 255] scale.
 */
GsStatus gs_ssim(const GsImage *reference, const GsImage *test, double *out);

/**
 * PSNR and SSIM after min-max mapping both images onto [0, 255].
 */
GsStatus gs_quality(const GsImage *reference,
                    const GsImage *test,
                    double *psnr_db,
                    double *ssim_out);

/**
 * Largest sample count taken while the object turns by less than
 * `theta_r_deg`.
 */
GsStatus gs_max_samples(double freq_hz, double omega_deg_per_s, double theta_r_deg, uint64_t *out);

/**
 * Frames of `object` rotating at `omega_deg_per_ms`, split into `batches`
 * equal batches that each share one speckle set.
 */
GsStatus gs_rotation_simulate(const GsImage *object,
                              double omega_deg_per_ms,
                              double frame_interval_ms,
                              size_t frames,
                              size_t batches,
                              size_t samples_per_frame,
                              uint64_t seed,
                              uint32_t dist,
                              GsBatches **out);

GsStatus gs_batches_count(const GsBatches *batches, size_t *count);

/**
 * Frames in one batch.
 */
GsStatus gs_batches_frames(const GsBatches *batches, size_t batch, size_t *count);

/**
 * Per-frame rotation in degrees, searched over `[grid_min, grid_max]` in
 * steps of `grid_step`, with default pairing and pre-filtering.
 */
GsStatus gs_fma_estimate_alpha(const GsBatches *batches,
                               double grid_min,
                               double grid_max,
                               double grid_step,
                               double *alpha_deg);

/**
 * Rotates every frame back to the orientation of frame `base_frame` of
 * batch `base_batch` and concatenates them.
 */
GsStatus gs_fma_merge(const GsBatches *batches,
                      double alpha_deg,
                      size_t base_batch,
                      size_t base_frame,
                      GsMerged **out);

/**
 * Number of planes in the merged frame.
 */
GsStatus gs_merged_len(const GsMerged *merged, size_t *len);

GsStatus gs_merged_ghost_image(const GsMerged *merged, GsImage **out);

/**
 * Empty container for `height` by `width` frames of `samples` samples each.
 */
GsStatus gs_container_new(size_t height, size_t width, size_t samples, GsContainer **out);

GsStatus gs_container_read(const char *file, GsContainer **out);

GsStatus gs_container_write(const GsContainer *container, const char *file);

GsStatus gs_container_len(const GsContainer *container, size_t *len);

/**
 * Appends a group frame. With `include_planes` false the planes are
 * regenerated from the speckle seed on read.
 */
GsStatus gs_container_push_frame(GsContainer *container,
                                 const GsGroupFrame *frame,
                                 const GsImage *ground_truth,
                                 bool include_planes);

/**
 * Appends a merged frame under `label`; its planes are always stored.
 */
GsStatus gs_container_push_merged(GsContainer *container,
                                  const GsMerged *merged,
                                  const char *label,
                                  const GsImage *ground_truth);

/**
 * Correlation image of one entry.
 */
GsStatus gs_container_ghost_image(const GsContainer *container, size_t index, GsImage **out);

/**
 * Regroups consecutive non-derived entries into batches.
 */
GsStatus gs_container_to_batches(const GsContainer *container, GsBatches **out);

/**
 * Message for the most recent failure on the calling thread, or null if no
 * call has failed yet. The pointer stays valid until the next failure on
 * this thread.
 */
const char *gs_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GHOSTSIM_H */
