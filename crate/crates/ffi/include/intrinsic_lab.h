#ifndef INTRINSIC_LAB_H
#define INTRINSIC_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum IlStatus {
  IL_STATUS_OK = 0,
  IL_STATUS_NULL_POINTER = 1,
  IL_STATUS_INVALID_PARAMETER = 2,
  IL_STATUS_DIMENSION_MISMATCH = 3,
  IL_STATUS_OUTSIDE_DOMAIN = 4,
  IL_STATUS_PRECONDITION = 5,
  IL_STATUS_NON_CONVERGENCE = 6,
  IL_STATUS_HESSIAN_LOSS = 7,
  IL_STATUS_NO_VALID_DISK = 8,
  IL_STATUS_BRACKET_VIOLATION = 9,
  IL_STATUS_PANIC = 10,
} IlStatus;

// Opaque domain handle.
typedef struct IlDomain IlDomain;

// Opaque solved metric grid.
typedef struct IlMetricGrid IlMetricGrid;

// Parameter window `x_lower < |x| < x_upper`.
typedef struct IlWindow {
  double epsilon;
  double epsilon_bound;
  double x_lower;
  double x_upper;
  bool window_nonempty;
  bool parameters_valid;
} IlWindow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates the domain `{|z_i| < R, |z_1⋯z_n| < ε}` with inner radius `r`.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum IlStatus il_domain_new(size_t n,
                            double r,
                            double big_r,
                            double epsilon,
                            struct IlDomain **out);

// Releases a domain handle. Null is ignored.
//
// # Safety
// `d` must be null or a live handle from `il_domain_new`.
void il_domain_free(struct IlDomain *d);

// Writes whether the point lies in the domain.
//
// # Safety
// `d` must be a live handle, `z` must hold `2n` doubles and `out` must be writable.
enum IlStatus il_domain_contains(const struct IlDomain *d, const double *z, size_t n, bool *out);

// Poincaré distance `artanh |(a - b)/(1 - āb)|` in the unit disk.
//
// # Safety
// `out` must be writable.
enum IlStatus il_poincare_distance(double a_re, double a_im, double b_re, double b_im, double *out);

// Theorem A window for `(n, r, ε)`.
//
// # Safety
// `out` must be writable.
enum IlStatus il_theorem_a_window(size_t n, double r, double epsilon, struct IlWindow *out);

// Theorem B window for `(n, r)`; `epsilon` is set to `rⁿ`.
//
// # Safety
// `out` must be writable.
enum IlStatus il_theorem_b_window(size_t n, double r, struct IlWindow *out);

// Certified lower bound for the Carathéodory distance with the default map families.
//
// # Safety
// `d` must be a live handle, `x` and `y` must hold `2n` doubles, `out` must be writable.
enum IlStatus il_caratheodory_lower(const struct IlDomain *d,
                                    const double *x,
                                    const double *y,
                                    size_t n,
                                    double *out);

// Certified upper bound for the Lempert function; `IL_STATUS_NO_VALID_DISK` when no
// disk could be certified.
//
// # Safety
// As for [`il_caratheodory_lower`].
enum IlStatus il_lempert_upper(const struct IlDomain *d,
                               const double *x,
                               const double *y,
                               size_t n,
                               uint64_t seed,
                               double *out);

// Certified upper bound for `k^(m)` from chains of at most `m` disks.
//
// # Safety
// As for [`il_caratheodory_lower`].
enum IlStatus il_chain_upper(const struct IlDomain *d,
                             size_t m,
                             const double *x,
                             const double *y,
                             size_t n,
                             uint64_t seed,
                             double *out);

// Solves for the Kähler-Einstein potential of a two-dimensional domain on a
// `resolution × resolution` grid.
//
// # Safety
// `d` must be a live handle and `out` writable.
enum IlStatus il_ke_solve(const struct IlDomain *d, size_t resolution, struct IlMetricGrid **out);

// Releases a grid handle. Null is ignored.
//
// # Safety
// `g` must be null or a live handle from `il_ke_solve`.
void il_ke_free(struct IlMetricGrid *g);

// Writes the diagonal metric entries at the origin and their error estimate.
//
// # Safety
// `g` must be a live handle, `out` must hold two doubles and `margin` be writable.
enum IlStatus il_ke_origin_metric(const struct IlMetricGrid *g, double *out, double *margin);

// Metric distance estimate between two points of the solved domain.
//
// # Safety
// `g` must be a live handle, `x` and `y` must hold four doubles, `out` writable.
enum IlStatus il_ke_distance(const struct IlMetricGrid *g,
                             const double *x,
                             const double *y,
                             double *out);

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length, 0 if there is none.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t il_last_error_message(char *buf, size_t len);

// Static description of a status code.
const char *il_status_string(enum IlStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTRINSIC_LAB_H */
