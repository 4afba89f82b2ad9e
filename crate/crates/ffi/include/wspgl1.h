#ifndef WSPGL1_H
#define WSPGL1_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Wspgl1Algorithm {
  WSPGL1_ALGORITHM_SPGL1 = 0,
  WSPGL1_ALGORITHM_WSPGL1 = 1,
  /**
   * Needs the true support.
   */
  WSPGL1_ALGORITHM_ORACLE = 2,
  /**
   * Four reweighting passes with `δ = 0.1`.
   */
  WSPGL1_ALGORITHM_IRWL1 = 3,
} Wspgl1Algorithm;

typedef enum Wspgl1Status {
  WSPGL1_STATUS_OK = 0,
  WSPGL1_STATUS_NULL_POINTER = 1,
  WSPGL1_STATUS_DIMENSION = 2,
  WSPGL1_STATUS_INVALID_ARGUMENT = 3,
  WSPGL1_STATUS_NON_FINITE = 4,
  WSPGL1_STATUS_IO = 5,
  WSPGL1_STATUS_PANIC = 6,
} Wspgl1Status;

/**
 * Opaque measurement operator.
 */
typedef struct Wspgl1Operator Wspgl1Operator;

/**
 * Opaque recovery result.
 */
typedef struct Wspgl1Result Wspgl1Result;

/**
 * Driver settings. Zero in `support_size` selects the default
 * `round(n / (2 ln(N/n)))`; zero in `iteration_budget` removes the cap.
 */
typedef struct Wspgl1DriverConfig {
  double omega;
  size_t support_size;
  size_t max_newton_iters;
  double root_tol;
  size_t iteration_budget;
  size_t spg_max_iterations;
  double optimality_tol;
} Wspgl1DriverConfig;

typedef struct Wspgl1TracePoint {
  double tau;
  double residual_norm;
  double lambda;
  bool weighted;
} Wspgl1TracePoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *wspgl1_last_error(void);

struct Wspgl1DriverConfig wspgl1_driver_config_default(void);

/**
 * Dense Gaussian operator with i.i.d. `N(0, 1/rows)` entries drawn from
 * `seed`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum Wspgl1Status wspgl1_operator_gaussian(size_t rows,
                                           size_t cols,
                                           uint64_t seed,
                                           struct Wspgl1Operator **out);

/**
 * Operator from a row-major `rows × cols` matrix, which is copied.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles and `out` to writable
 * storage for one handle.
 */
enum Wspgl1Status wspgl1_operator_from_row_major(size_t rows,
                                                 size_t cols,
                                                 const double *data,
                                                 struct Wspgl1Operator **out);

/**
 * # Safety
 * `op` must be null or a handle from this library not yet freed.
 */
void wspgl1_operator_free(struct Wspgl1Operator *op);

/**
 * Number of rows, or 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live handle.
 */
size_t wspgl1_operator_rows(const struct Wspgl1Operator *op);

/**
 * Number of columns, or 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live handle.
 */
size_t wspgl1_operator_cols(const struct Wspgl1Operator *op);

/**
 * Forward plus adjoint products applied so far.
 *
 * # Safety
 * `op` must be null or a live handle.
 */
uint64_t wspgl1_operator_products(const struct Wspgl1Operator *op);

/**
 * `y = A x`.
 *
 * # Safety
 * `op` must be a live handle; `x` and `y` must point to `x_len` and `y_len`
 * doubles.
 */
enum Wspgl1Status wspgl1_operator_apply(const struct Wspgl1Operator *op,
                                        const double *x,
                                        size_t x_len,
                                        double *y,
                                        size_t y_len);

/**
 * `x = Aᵀ y`.
 *
 * # Safety
 * `op` must be a live handle; `y` and `x` must point to `y_len` and `x_len`
 * doubles.
 */
enum Wspgl1Status wspgl1_operator_apply_adjoint(const struct Wspgl1Operator *op,
                                                const double *y,
                                                size_t y_len,
                                                double *x,
                                                size_t x_len);

/**
 * Fills `out` with a random `k`-sparse signal of length `len` with
 * standard normal nonzeros, drawn from `seed`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum Wspgl1Status wspgl1_sparse_signal(size_t len, size_t k, uint64_t seed, double *out);

/**
 * Recovers a sparse `x` with `‖Ax − y‖₂ ≈ epsilon`.
 *
 * `support` is read only for [`Wspgl1Algorithm::Oracle`]. A null `cfg`
 * uses [`wspgl1_driver_config_default`].
 *
 * # Safety
 * `op` must be a live handle, `y` must point to `y_len` doubles, `support`
 * to `support_len` indices, `cfg` must be null or valid, and `out` must be
 * writable storage for one handle.
 */
enum Wspgl1Status wspgl1_solve(const struct Wspgl1Operator *op,
                               enum Wspgl1Algorithm algorithm,
                               const double *y,
                               size_t y_len,
                               double epsilon,
                               const size_t *support,
                               size_t support_len,
                               const struct Wspgl1DriverConfig *cfg,
                               struct Wspgl1Result **out);

/**
 * # Safety
 * `res` must be null or a handle from [`wspgl1_solve`] not yet freed.
 */
void wspgl1_result_free(struct Wspgl1Result *res);

/**
 * Length of the recovered signal, or 0 for a null handle.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
size_t wspgl1_result_len(const struct Wspgl1Result *res);

/**
 * Copies the recovered signal into `out`, which must hold exactly
 * [`wspgl1_result_len`] values.
 *
 * # Safety
 * `res` must be a live handle and `out` must point to `len` doubles.
 */
enum Wspgl1Status wspgl1_result_x(const struct Wspgl1Result *res, double *out, size_t len);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
bool wspgl1_result_converged(const struct Wspgl1Result *res);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
size_t wspgl1_result_newton_iters(const struct Wspgl1Result *res);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
uint64_t wspgl1_result_products(const struct Wspgl1Result *res);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
size_t wspgl1_result_support_len(const struct Wspgl1Result *res);

/**
 * Copies the final support estimate (sorted, 0-based) into `out`.
 *
 * # Safety
 * `res` must be a live handle and `out` must point to `len` indices.
 */
enum Wspgl1Status wspgl1_result_support(const struct Wspgl1Result *res, size_t *out, size_t len);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
size_t wspgl1_result_trace_len(const struct Wspgl1Result *res);

/**
 * # Safety
 * `res` must be a live handle and `out` writable.
 */
enum Wspgl1Status wspgl1_result_trace_point(const struct Wspgl1Result *res,
                                            size_t index,
                                            struct Wspgl1TracePoint *out);

/**
 * Euclidean projection of `v` onto `{u : Σ wᵢ|uᵢ| ≤ tau}`. Weights must
 * lie in (0, 1]; a null `w` means unit weights. `out` may alias `v`.
 *
 * # Safety
 * `v`, `out` and (if non-null) `w` must point to `len` doubles.
 */
enum Wspgl1Status wspgl1_project_weighted_l1(const double *v,
                                             const double *w,
                                             size_t len,
                                             double tau,
                                             double *out);

/**
 * `Σ wᵢ|uᵢ|`; a null `w` means unit weights.
 *
 * # Safety
 * `u` and (if non-null) `w` must point to `len` doubles; `out` writable.
 */
enum Wspgl1Status wspgl1_weighted_l1(const double *u, const double *w, size_t len, double *out);

/**
 * `maxᵢ |vᵢ| / wᵢ`, the dual of the weighted ℓ1 norm.
 *
 * # Safety
 * `v` and (if non-null) `w` must point to `len` doubles; `out` writable.
 */
enum Wspgl1Status wspgl1_weighted_linf_dual(const double *v,
                                            const double *w,
                                            size_t len,
                                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WSPGL1_H */
