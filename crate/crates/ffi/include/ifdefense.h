#ifndef IFDEFENSE_H
#define IFDEFENSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum IfdStatus {
  IFD_STATUS_OK = 0,
  IFD_STATUS_NULL_ARGUMENT = 1,
  IFD_STATUS_INVALID_ARGUMENT = 2,
  IFD_STATUS_IO = 3,
  IFD_STATUS_PARSE = 4,
  IFD_STATUS_EMPTY_INPUT = 5,
  IFD_STATUS_TOO_FEW_POINTS = 6,
  IFD_STATUS_EMPTY_SURFACE = 7,
  IFD_STATUS_BUFFER_TOO_SMALL = 8,
  IFD_STATUS_PANIC = 9,
} IfdStatus;

/*
 Opaque point cloud.
 */
typedef struct IfdCloud IfdCloud;

/*
 Opaque occupancy field.
 */
typedef struct IfdField IfdField;

/*
 Restoration settings; start from [`ifd_restore_params_default`].
 */
typedef struct IfdRestoreParams {
  double tau;
  double lambda;
  double h;
  size_t k_rep;
  double learning_rate;
  size_t iterations;
  size_t target_count;
} IfdRestoreParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failure on this thread; empty if none. Valid until
 the next failing call on the same thread.
 */
const char *ifd_last_error(void);

/*
 Builds a cloud from `count` xyz triples.

 # Safety
 `xyz` must point to `3 * count` doubles; `out` must be writable.
 */
enum IfdStatus ifd_cloud_new(const double *xyz, size_t count, struct IfdCloud **out);

/*
 Reads an XYZ or PLY file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum IfdStatus ifd_cloud_read(const char *path, struct IfdCloud **out);

/*
 Writes a cloud; the format follows the extension (`.xyz` or `.ply`).

 # Safety
 `cloud` must be a live handle and `path` a NUL-terminated string.
 */
enum IfdStatus ifd_cloud_write(const struct IfdCloud *cloud, const char *path);

/*
 Number of points; 0 for a null handle.

 # Safety
 `cloud` must be null or a live handle.
 */
size_t ifd_cloud_len(const struct IfdCloud *cloud);

/*
 Copies coordinates as xyz triples into `dst`, which holds `capacity`
 doubles.

 # Safety
 `dst` must be writable for `capacity` doubles.
 */
enum IfdStatus ifd_cloud_copy(const struct IfdCloud *cloud, double *dst, size_t capacity);

/*
 # Safety
 `cloud` must be null or a handle not yet freed.
 */
void ifd_cloud_free(struct IfdCloud *cloud);

/*
 Built-in field: `sphere`, `torus`, `two-spheres` or `box-minus-sphere`.

 # Safety
 `name` must be a NUL-terminated string; `out` must be writable.
 */
enum IfdStatus ifd_field_fixture(const char *name, struct IfdField **out);

/*
 Analytic CSG field from its JSON description.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum IfdStatus ifd_field_from_json(const char *json, struct IfdField **out);

/*
 MLP field from a binary weight file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum IfdStatus ifd_field_load_mlp(const char *path, struct IfdField **out);

/*
 Occupancy at `xyz`; the gradient is written to `grad` when it is not null.

 # Safety
 `xyz` must hold 3 doubles, `occupancy` be writable, `grad` null or
 writable for 3 doubles.
 */
enum IfdStatus ifd_field_occupancy(const struct IfdField *field,
                                   const double *xyz,
                                   double *occupancy,
                                   double *grad);

/*
 # Safety
 `field` must be null or a handle not yet freed.
 */
void ifd_field_free(struct IfdField *field);

/*
 Statistical outlier removal with `k` neighbors and threshold multiplier
 `alpha`.

 # Safety
 `cloud` must be a live handle; `out` must be writable.
 */
enum IfdStatus ifd_sor(const struct IfdCloud *cloud, size_t k, double alpha, struct IfdCloud **out);

struct IfdRestoreParams ifd_restore_params_default(void);

/*
 Optimizes point coordinates against the field. A null `params` uses the
 defaults.

 # Safety
 Handles must be live; `params` null or valid; `out` writable.
 */
enum IfdStatus ifd_restore(const struct IfdCloud *cloud,
                           const struct IfdField *field,
                           const struct IfdRestoreParams *params,
                           uint64_t seed,
                           struct IfdCloud **out);

/*
 Marching Cubes at level `tau` on a `resolution`-cell grid over
 [-1.1, 1.1]^3, then `count` area-weighted surface samples.

 # Safety
 `field` must be a live handle; `out` must be writable.
 */
enum IfdStatus ifd_remesh(const struct IfdField *field,
                          size_t resolution,
                          double tau,
                          size_t count,
                          uint64_t seed,
                          struct IfdCloud **out);

/*
 Applies a corruption chain such as `outliers(0.1,0.3)+jitter(0.02)`.

 # Safety
 Handles must be live, `spec` NUL-terminated, `out` writable.
 */
enum IfdStatus ifd_corrupt(const struct IfdCloud *cloud,
                           const struct IfdField *field,
                           const char *spec,
                           double tau,
                           uint64_t seed,
                           struct IfdCloud **out);

/*
 Mean squared nearest-neighbor distance, summed over both directions.

 # Safety
 Handles must be live; `out` writable.
 */
enum IfdStatus ifd_chamfer(const struct IfdCloud *a, const struct IfdCloud *b, double *out);

/*
 Symmetric Hausdorff distance.

 # Safety
 Handles must be live; `out` writable.
 */
enum IfdStatus ifd_hausdorff(const struct IfdCloud *a, const struct IfdCloud *b, double *out);

/*
 Library version, static storage.
 */
const char *ifd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IFDEFENSE_H */
