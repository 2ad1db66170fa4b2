#ifndef CHFORD_H
#define CHFORD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define CHF_OK 0

#define CHF_ERR_NULL -1

#define CHF_ERR_USAGE -2

#define CHF_ERR_INVALID_INPUT -3

#define CHF_ERR_INVALID_MODULI -4

#define CHF_ERR_SYNTAX -5

#define CHF_ERR_FIXES_INFINITY -6

#define CHF_ERR_DEGENERATE -7

#define CHF_ERR_OUT_OF_SCOPE -8

#define CHF_ERR_NO_SIGN_CHANGE -9

#define CHF_ERR_IO -10

#define CHF_ERR_CONFIG -11

#define CHF_ERR_BUFFER -12

#define CHF_ERR_UTF8 -13

#define CHF_ERR_PANIC -14

#define CHF_KIND_REGULAR_ELLIPTIC 0

#define CHF_KIND_SPECIAL_ELLIPTIC 1

#define CHF_KIND_LOXODROMIC 2

#define CHF_KIND_PARABOLIC_UNIPOTENT 3

#define CHF_KIND_PARABOLIC_OTHER 4

#define CHF_KIND_BOUNDARY_UNDETERMINED 5

/**
 * Generators I1..I4, A, B, C at a moduli point.
 */
typedef struct ChfGenerators ChfGenerators;

/**
 * A group element (complex square matrix with its word).
 */
typedef struct ChfMatrix ChfMatrix;

/**
 * A point `(h, t)` of the moduli space.
 */
typedef struct ChfModuli ChfModuli;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null.
 *
 * The pointer stays valid until the next `chf_*` call on the same thread.
 */
const char *chf_last_error(void);

/**
 * Create a moduli point; fails with `CHF_ERR_INVALID_MODULI` outside the moduli space.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t chf_moduli_new(double h, double t, struct ChfModuli **out);

/**
 * The base point `(sqrt 2, arccos(-7/8))`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t chf_moduli_base_point(struct ChfModuli **out);

/**
 * # Safety
 * `p` must come from `chf_moduli_*` and not be freed twice; null is ignored.
 */
void chf_moduli_free(struct ChfModuli *p);

/**
 * `h`, `t`, whether the point is on the 2D slice, and the Gram determinant.
 *
 * # Safety
 * All pointers must be valid.
 */
int32_t chf_moduli_info(const struct ChfModuli *p,
                        double *h,
                        double *t,
                        int32_t *is_2d_slice,
                        double *gram_det);

/**
 * Build generators; `dim` is 2 (3x3, on the slice only) or 3 (4x4).
 *
 * # Safety
 * `p` and `out` must be valid.
 */
int32_t chf_generators_new(const struct ChfModuli *p, uint32_t dim, struct ChfGenerators **out);

/**
 * # Safety
 * `g` must come from `chf_generators_new`; null is ignored.
 */
void chf_generators_free(struct ChfGenerators *g);

/**
 * Evaluate a word in `A B C a b c I1..I4` (powers with `^`).
 *
 * # Safety
 * `g`, `word` (NUL-terminated) and `out` must be valid.
 */
int32_t chf_generators_eval(const struct ChfGenerators *g,
                            const char *word,
                            struct ChfMatrix **out);

/**
 * # Safety
 * `m` must come from `chf_generators_eval`; null is ignored.
 */
void chf_matrix_free(struct ChfMatrix *m);

/**
 * Number of rows (= columns).
 *
 * # Safety
 * Pointers must be valid.
 */
int32_t chf_matrix_dim(const struct ChfMatrix *m, uintptr_t *dim);

/**
 * Copy the entries row-major as interleaved `(re, im)`; `len` must be at least `2 dim^2`.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
int32_t chf_matrix_entries(const struct ChfMatrix *m, double *buf, uintptr_t len);

/**
 * Classify with default tolerances; `kind` receives a `CHF_KIND_*` value.
 *
 * # Safety
 * Pointers must be valid.
 */
int32_t chf_matrix_classify(const struct ChfMatrix *m, int32_t *kind, double *discriminant);

/**
 * Isometric sphere: center `(Re z_1, Im z_1, ..., t)` into `center` (length
 * `2 (dim - 2) + 1`) and the Cygan radius.
 *
 * # Safety
 * `center` must hold `len` doubles; other pointers must be valid.
 */
int32_t chf_matrix_isometric_sphere(const struct ChfMatrix *m,
                                    double *center,
                                    uintptr_t len,
                                    double *radius);

/**
 * Run the audit at `p`: the full 3x3 audit when `full` is nonzero, otherwise
 * the neighborhood audit. `verdict` is 1 on pass, 0 on fail.
 *
 * # Safety
 * Pointers must be valid.
 */
int32_t chf_verify(const struct ChfModuli *p, int32_t full, int32_t k_max, int32_t *verdict);

/**
 * `h` on the slice curve where I(B) becomes internally tangent to I(C).
 *
 * # Safety
 * `h1` must be valid.
 */
int32_t chf_tangency_h1(double *h1);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHFORD_H */
