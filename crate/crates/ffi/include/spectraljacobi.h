#ifndef SPECTRALJACOBI_H
#define SPECTRALJACOBI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes shared by all entry points.
 */
typedef enum SjStatus {
  SJ_STATUS_OK = 0,
  /*
   Parameters outside the domain of the operation.
   */
  SJ_STATUS_DOMAIN = 1,
  /*
   Malformed or structurally invalid input data.
   */
  SJ_STATUS_DATA = 2,
  /*
   The computation could not reach its accuracy target.
   */
  SJ_STATUS_ACCURACY = 3,
  /*
   A required pointer argument was null.
   */
  SJ_STATUS_NULL_POINTER = 4,
  /*
   A caller-provided buffer is too small; the required size is reported.
   */
  SJ_STATUS_BUFFER_TOO_SMALL = 5,
  /*
   Invalid UTF-8 in a string argument.
   */
  SJ_STATUS_INVALID_STRING = 6,
  /*
   Internal panic caught at the boundary.
   */
  SJ_STATUS_PANIC = 7,
} SjStatus;

/*
 Block recurrence with `N×N` coefficients.
 */
typedef struct SjBlockRecurrence SjBlockRecurrence;

/*
 Discrete matrix-valued measure.
 */
typedef struct SjMatrixMeasure SjMatrixMeasure;

/*
 Discrete scalar measure (Gauss rule).
 */
typedef struct SjMeasure SjMeasure;

/*
 Scalar recurrence coefficients.
 */
typedef struct SjRecurrence SjRecurrence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread, or null. The pointer
 stays valid until the next call into the library from the same thread.
 */
const char *sj_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *sj_version(void);

/*
 Named family: `legendre`, `chebyshev_t`, `chebyshev_u`, `hermite`,
 `laguerre:a`, `jacobi:a,b`, `qinv_hermite:q`.

 # Safety
 `name` must be a NUL-terminated string; `out` must be writable.
 */
enum SjStatus sj_recurrence_from_name(const char *name, struct SjRecurrence **out_rec);

/*
 Finite coefficient table `a[0..len]`, `b[0..len]` with total mass `m0`.

 # Safety
 `a` and `b` must point to `len` readable doubles; `out_rec` must be writable.
 */
enum SjStatus sj_recurrence_explicit(double m0,
                                     const double *a,
                                     const double *b,
                                     size_t len,
                                     struct SjRecurrence **out_rec);

/*
 # Safety
 `rec` must come from this library and not be used afterwards.
 */
void sj_recurrence_free(struct SjRecurrence *rec);

/*
 Total mass `m0` of the orthogonality measure.

 # Safety
 `rec` must be a live handle; `m0` must be writable.
 */
enum SjStatus sj_recurrence_m0(const struct SjRecurrence *rec, double *m0);

/*
 Zeros of `p_n`, ascending, into `buf[0..cap]`; `len_out` receives `n`.

 # Safety
 `buf` must hold `cap` doubles; `len_out` may be null.
 */
enum SjStatus sj_zeros(const struct SjRecurrence *rec,
                       size_t n,
                       double *buf,
                       size_t cap,
                       size_t *len_out);

/*
 Markov approximant of order `n` to `∫ (x − z)⁻¹ dμ(x)/m0`.

 # Safety
 `out_re` and `out_im` must be writable.
 */
enum SjStatus sj_markov(const struct SjRecurrence *rec,
                        size_t n,
                        double z_re,
                        double z_im,
                        double *out_re,
                        double *out_im);

/*
 Christoffel–Darboux kernel `Σ_{k<n} p_k(x) p_k(y)`.

 # Safety
 `value` must be writable.
 */
enum SjStatus sj_cd_kernel(const struct SjRecurrence *rec,
                           size_t n,
                           double x,
                           double y,
                           double *value);

/*
 `m`-point Gauss rule with total mass `m0`.

 # Safety
 `rec` must be live; `out_measure` must be writable.
 */
enum SjStatus sj_gauss_quadrature(const struct SjRecurrence *rec,
                                  size_t m,
                                  double m0,
                                  struct SjMeasure **out_measure);

/*
 Number of nodes.

 # Safety
 `measure` must be live; `len` must be writable.
 */
enum SjStatus sj_measure_len(const struct SjMeasure *measure, size_t *len);

/*
 Copies nodes and weights into two buffers of capacity `cap`.

 # Safety
 `nodes` and `weights` must each hold `cap` doubles.
 */
enum SjStatus sj_measure_copy(const struct SjMeasure *measure,
                              double *nodes,
                              double *weights,
                              size_t cap);

/*
 # Safety
 `measure` must come from this library and not be used afterwards.
 */
void sj_measure_free(struct SjMeasure *measure);

/*
 Parses `{"N", "M0", "blocks": [{"A", "B"}, ...]}`; complex entries are `[re, im]`.

 # Safety
 `json` must be NUL-terminated; `out_rec` must be writable.
 */
enum SjStatus sj_block_recurrence_from_json(const char *json, struct SjBlockRecurrence **out_rec);

/*
 Block size `N`.

 # Safety
 `rec` must be live; `dim` must be writable.
 */
enum SjStatus sj_block_recurrence_dim(const struct SjBlockRecurrence *rec, size_t *dim);

/*
 Matrix Markov approximant `S(z)`, row-major into `re[0..N²]`, `im[0..N²]`.

 # Safety
 `re` and `im` must each hold `cap` doubles.
 */
enum SjStatus sj_block_markov(const struct SjBlockRecurrence *rec,
                              size_t n,
                              double z_re,
                              double z_im,
                              double *re,
                              double *im,
                              size_t cap);

/*
 # Safety
 `rec` must come from this library and not be used afterwards.
 */
void sj_block_recurrence_free(struct SjBlockRecurrence *rec);

/*
 Matrix Gauss rule from the `m`-block truncation.

 # Safety
 `rec` must be live; `out_measure` must be writable.
 */
enum SjStatus sj_block_quadrature(const struct SjBlockRecurrence *rec,
                                  size_t m,
                                  struct SjMatrixMeasure **out_measure);

/*
 Number of nodes.

 # Safety
 `measure` must be live; `len` must be writable.
 */
enum SjStatus sj_matrix_measure_len(const struct SjMatrixMeasure *measure, size_t *len);

/*
 Node `j` and its mass, row-major into `re`/`im` of capacity `cap`.

 # Safety
 `node` must be writable; `re` and `im` must each hold `cap` doubles.
 */
enum SjStatus sj_matrix_measure_get(const struct SjMatrixMeasure *measure,
                                    size_t j,
                                    double *node,
                                    double *re,
                                    double *im,
                                    size_t cap);

/*
 # Safety
 `measure` must come from this library and not be used afterwards.
 */
void sj_matrix_measure_free(struct SjMatrixMeasure *measure);

/*
 Closed-form `‖φ_{qⁿ}‖²`.

 # Safety
 `value` must be writable.
 */
enum SjStatus sj_qhermite_norm_sq(double q, double alpha, size_t n, double *value);

/*
 Windowed eigenvector `φ_{qⁿ}` on `[−window, window]` into `buf` (length `2·window+1`).

 # Safety
 `buf` must hold `cap` doubles; `len_out` may be null.
 */
enum SjStatus sj_qhermite_eigenvector(double q,
                                      double alpha,
                                      size_t n,
                                      int64_t window,
                                      double *buf,
                                      size_t cap,
                                      size_t *len_out);

/*
 Casorati determinant `[φ_z, Φ_z] = −z (1/z; q)_∞`.

 # Safety
 `out_re` and `out_im` must be writable.
 */
enum SjStatus sj_qhermite_wronskian(double q,
                                    double alpha,
                                    double z_re,
                                    double z_im,
                                    double *out_re,
                                    double *out_im);

/*
 Bound-state energies `−(b − m − ½)²`, ascending; `len_out` receives their count.

 # Safety
 `buf` must hold `cap` doubles; `len_out` may be null.
 */
enum SjStatus sj_morse_bound_states(double b, double *buf, size_t cap, size_t *len_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECTRALJACOBI_H */
