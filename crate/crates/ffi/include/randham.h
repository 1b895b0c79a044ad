#ifndef RANDHAM_H
#define RANDHAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RhKernel {
  RH_KERNEL_SQUARED_EXPONENTIAL = 1,
  RH_KERNEL_PERIODIC = 2,
  RH_KERNEL_AUTONOMOUS = 3,
} RhKernel;

typedef enum RhStatus {
  RH_STATUS_OK = 0,
  RH_STATUS_NULL_POINTER = 1,
  RH_STATUS_INVALID_ARGUMENT = 2,
  RH_STATUS_OUT_OF_RANGE = 3,
  RH_STATUS_FACTORIZATION_FAILURE = 4,
  RH_STATUS_NOT_AUTONOMOUS = 5,
  RH_STATUS_UNSUPPORTED = 6,
  RH_STATUS_NON_FINITE = 7,
  RH_STATUS_REFINEMENT_OVERFLOW = 8,
  RH_STATUS_DEGENERATE_OVERLAP = 9,
  RH_STATUS_PARSE_ERROR = 10,
  RH_STATUS_TOO_MANY_FAILURES = 11,
  RH_STATUS_IO_FAILURE = 12,
  RH_STATUS_PANIC = 13,
} RhStatus;

typedef struct RhCurve RhCurve;

typedef struct RhHamiltonian RhHamiltonian;

/**
 * Law of a random Hamiltonian; draws are indexed.
 */
typedef struct RhSampler RhSampler;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *rh_last_error(void);

/**
 * Number of Gaussian coordinates per draw; `kernel` is an [`RhKernel`] value.
 *
 * # Safety
 * `out_dim` must be null or valid for writes.
 */
enum RhStatus rh_gaussian_dimension(double regularity,
                                    uint32_t spatial_max,
                                    uint32_t temporal_max,
                                    uint32_t kernel,
                                    uint64_t *out_dim);

/**
 * # Safety
 * `out_sampler` must be null or valid for writes.
 */
enum RhStatus rh_sampler_new(double regularity,
                             uint32_t spatial_max,
                             uint32_t temporal_max,
                             uint32_t kernel,
                             uint64_t seed,
                             struct RhSampler **out_sampler);

/**
 * # Safety
 * `sampler` must be null or a handle from [`rh_sampler_new`] not yet freed.
 */
void rh_sampler_free(struct RhSampler *sampler);

/**
 * Draw number `index` of the sampler's law.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum RhStatus rh_sampler_draw(const struct RhSampler *sampler,
                              uint64_t index,
                              struct RhHamiltonian **out_h);

/**
 * # Safety
 * `h` must be null or a handle from [`rh_sampler_draw`] not yet freed.
 */
void rh_hamiltonian_free(struct RhHamiltonian *h);

/**
 * # Safety
 * Pointers must be null or valid.
 */
enum RhStatus rh_hamiltonian_value(const struct RhHamiltonian *h,
                                   double t,
                                   double x,
                                   double y,
                                   double *out_value);

/**
 * `X_H(t, (x, y))` written to `out_xy[0..2]`.
 *
 * # Safety
 * `out_xy` must be null or valid for two writes.
 */
enum RhStatus rh_hamiltonian_vector_field(const struct RhHamiltonian *h,
                                          double t,
                                          double x,
                                          double y,
                                          double *out_xy);

/**
 * Time-one image (or preimage when `inverse` is nonzero) of `(x, y)`,
 * reduced to `[0, 1)²`.
 *
 * # Safety
 * `out_xy` must be null or valid for two writes.
 */
enum RhStatus rh_hamiltonian_flow_point(const struct RhHamiltonian *h,
                                        double x,
                                        double y,
                                        uint32_t steps,
                                        int32_t inverse,
                                        double *out_xy);

/**
 * Time-one image of `S¹ × {y}` sampled with `segments` segments.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum RhStatus rh_advect_horizontal(const struct RhHamiltonian *h,
                                   double y,
                                   uint32_t segments,
                                   uint32_t steps,
                                   double refinement_threshold,
                                   uint32_t max_refinement_depth,
                                   struct RhCurve **out_curve);

/**
 * # Safety
 * `curve` must be null or a handle from [`rh_advect_horizontal`] not yet freed.
 */
void rh_curve_free(struct RhCurve *curve);

/**
 * # Safety
 * Pointers must be null or valid.
 */
enum RhStatus rh_curve_len(const struct RhCurve *curve, uint64_t *out_len);

/**
 * Copy up to `capacity` lifted vertices as `x0, y0, x1, y1, …` into `buf`.
 *
 * # Safety
 * `buf` must be valid for `2 * capacity` writes.
 */
enum RhStatus rh_curve_vertices(const struct RhCurve *curve,
                                double *buf,
                                uint64_t capacity,
                                uint64_t *out_written);

/**
 * Crossings of `curve` with the test Lagrangian `label` (`"L1"` … `"L14"`).
 *
 * # Safety
 * Pointers must be null or valid; `label` nul-terminated.
 */
enum RhStatus rh_curve_count_crossings(const struct RhCurve *curve,
                                       const char *label,
                                       uint64_t *out_count);

/**
 * Run `intersections` or `concentration` from a TOML document and return the
 * CSV table. Free the string with [`rh_string_free`].
 *
 * # Safety
 * Strings must be nul-terminated; `out_csv` null or valid for writes.
 */
enum RhStatus rh_run_table(const char *command, const char *config_toml, char **out_csv);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void rh_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANDHAM_H */
