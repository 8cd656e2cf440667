#ifndef CHAINKIT_H
#define CHAINKIT_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero means success.
 */
typedef enum ChainkitStatus {
  CHAINKIT_STATUS_OK = 0,
  CHAINKIT_STATUS_NULL_POINTER = 1,
  CHAINKIT_STATUS_INVALID_INPUT = 2,
  CHAINKIT_STATUS_NOT_A_METRIC = 3,
  CHAINKIT_STATUS_PARAM_VIOLATION = 4,
  CHAINKIT_STATUS_TOO_LARGE = 5,
  CHAINKIT_STATUS_NUMERIC = 6,
  CHAINKIT_STATUS_IO = 7,
  CHAINKIT_STATUS_PANIC = 8,
} ChainkitStatus;

typedef enum ChainkitPrefactor {
  CHAINKIT_PREFACTOR_STATEMENT = 0,
  CHAINKIT_PREFACTOR_PROOF = 1,
} ChainkitPrefactor;

typedef struct ChainkitEnsemble ChainkitEnsemble;

typedef struct ChainkitFamily ChainkitFamily;

typedef struct ChainkitPairSet ChainkitPairSet;

typedef struct ChainkitSpace ChainkitSpace;

/**
 * Moment and entropy constants; field meaning as in the Rust `BoundParams`.
 */
typedef struct ChainkitBoundParams {
  double m;
  double p;
  double q;
  double c;
  double t;
  double beta;
  double diam;
} ChainkitBoundParams;

typedef struct ChainkitHolderConstant {
  double l;
  double l1;
  double l2;
  double tail_bound;
  uint32_t k0;
  size_t terms_used;
} ChainkitHolderConstant;

typedef struct ChainkitEstimate {
  double mean;
  double std_error;
  size_t replications;
  /**
   * Nonzero when the supremum ran over an empty pair set.
   */
  bool empty_sup;
} ChainkitEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *chainkit_last_error(void);

/**
 * Static description of a status code.
 */
const char *chainkit_status_str(enum ChainkitStatus status);

/**
 * Euclidean space from `n` points of dimension `dim`, row-major.
 */
enum ChainkitStatus chainkit_space_from_coords(const double *coords,
                                               size_t n,
                                               size_t dim,
                                               struct ChainkitSpace **out);

/**
 * Space from an `n × n` row-major distance matrix, checked for the metric axioms.
 */
enum ChainkitStatus chainkit_space_from_matrix(const double *dist,
                                               size_t n,
                                               struct ChainkitSpace **out);

/**
 * `points` equally spaced points on `[start, end]`.
 */
enum ChainkitStatus chainkit_space_uniform_grid(size_t points,
                                                double start,
                                                double end,
                                                struct ChainkitSpace **out);

/**
 * Loads a JSON or CSV space file.
 */
enum ChainkitStatus chainkit_space_load(const char *path, struct ChainkitSpace **out);

void chainkit_space_free(struct ChainkitSpace *space);

/**
 * Number of points, zero for a null handle.
 */
size_t chainkit_space_len(const struct ChainkitSpace *space);

enum ChainkitStatus chainkit_space_distance(const struct ChainkitSpace *space,
                                            size_t i,
                                            size_t j,
                                            double *out);

enum ChainkitStatus chainkit_space_diameter(const struct ChainkitSpace *space, double *out);

enum ChainkitStatus chainkit_space_min_gap(const struct ChainkitSpace *space, double *out);

/**
 * Internal covering number at radius `eta`. `exact_limit == 0` keeps the default.
 */
enum ChainkitStatus chainkit_covering_number(const struct ChainkitSpace *space,
                                             double eta,
                                             bool greedy,
                                             size_t exact_limit,
                                             size_t *out);

enum ChainkitStatus chainkit_family_build(const struct ChainkitSpace *space,
                                          bool greedy,
                                          size_t exact_limit,
                                          struct ChainkitFamily **out);

void chainkit_family_free(struct ChainkitFamily *family);

enum ChainkitStatus chainkit_family_levels(const struct ChainkitFamily *family,
                                           int32_t *n0,
                                           int32_t *n1);

/**
 * `φ_level(point)`.
 */
enum ChainkitStatus chainkit_family_phi(const struct ChainkitFamily *family,
                                        int32_t level,
                                        size_t point,
                                        size_t *out);

/**
 * Size of the net at `level`.
 */
enum ChainkitStatus chainkit_family_net_len(const struct ChainkitFamily *family,
                                            int32_t level,
                                            size_t *out);

/**
 * Runs all structural checks; `out` receives whether every one passed.
 */
enum ChainkitStatus chainkit_family_validate(const struct ChainkitSpace *space,
                                             const struct ChainkitFamily *family,
                                             bool *out);

enum ChainkitStatus chainkit_pairs_build(const struct ChainkitSpace *space,
                                         double a,
                                         uint32_t r,
                                         double c,
                                         struct ChainkitPairSet **out);

void chainkit_pairs_free(struct ChainkitPairSet *pairs);

size_t chainkit_pairs_len(const struct ChainkitPairSet *pairs);

enum ChainkitStatus chainkit_pairs_get(const struct ChainkitPairSet *pairs,
                                       size_t index,
                                       size_t *first,
                                       size_t *second);

/**
 * Whether every structural invariant of the pair set holds.
 */
enum ChainkitStatus chainkit_pairs_check(const struct ChainkitPairSet *pairs,
                                         const struct ChainkitSpace *space,
                                         bool *out);

/**
 * Domination check for one assignment of `dim`-dimensional values, point-major.
 */
enum ChainkitStatus chainkit_pairs_check_domination(const struct ChainkitPairSet *pairs,
                                                    const struct ChainkitSpace *space,
                                                    const double *values,
                                                    size_t len,
                                                    size_t dim,
                                                    bool *out);

enum ChainkitStatus chainkit_lemma_b27_bound(const struct ChainkitSpace *space,
                                             double delta,
                                             const struct ChainkitBoundParams *params,
                                             enum ChainkitPrefactor variant,
                                             size_t exact_limit,
                                             double *out);

/**
 * Same bound from a known covering number `n4` at `delta / 4`.
 */
enum ChainkitStatus chainkit_lemma_b27_from_count(size_t n4,
                                                  double delta,
                                                  const struct ChainkitBoundParams *params,
                                                  enum ChainkitPrefactor variant,
                                                  double *out);

enum ChainkitStatus chainkit_net_deviation_bound(int32_t n,
                                                 int32_t n1,
                                                 const struct ChainkitBoundParams *params,
                                                 double *out);

enum ChainkitStatus chainkit_holder_constant(const struct ChainkitBoundParams *params,
                                             double tol,
                                             struct ChainkitHolderConstant *out);

/**
 * `L·δ^{βp}`.
 */
double chainkit_corollary_bound(double l, double delta, double beta, double p);

/**
 * Fractional Brownian field with Hurst index `hurst` on a Euclidean space.
 */
enum ChainkitStatus chainkit_simulate_fbm(const struct ChainkitSpace *space,
                                          double hurst,
                                          size_t replications,
                                          uint64_t seed,
                                          struct ChainkitEnsemble **out);

/**
 * Compensated unit-rate Poisson process on a one-dimensional space.
 */
enum ChainkitStatus chainkit_simulate_poisson(const struct ChainkitSpace *space,
                                              size_t replications,
                                              uint64_t seed,
                                              struct ChainkitEnsemble **out);

void chainkit_ensemble_free(struct ChainkitEnsemble *ens);

size_t chainkit_ensemble_replications(const struct ChainkitEnsemble *ens);

size_t chainkit_ensemble_points(const struct ChainkitEnsemble *ens);

/**
 * Borrowed pointer to path `r` (`points` values), null when out of range.
 * Valid until the ensemble is freed.
 */
const double *chainkit_ensemble_path(const struct ChainkitEnsemble *ens, size_t r);

/**
 * Monte Carlo estimate of `E sup_{d ≤ δ} |X_θ − X_ϑ|^p`.
 */
enum ChainkitStatus chainkit_estimate_sup_increment(const struct ChainkitSpace *space,
                                                    const struct ChainkitEnsemble *ens,
                                                    double delta,
                                                    double p,
                                                    struct ChainkitEstimate *out);

/**
 * Monte Carlo estimate of `E sup_{θ ≠ ϑ} |X_θ − X_ϑ|^p / d^{βp}`.
 */
enum ChainkitStatus chainkit_estimate_holder_quotient(const struct ChainkitSpace *space,
                                                      const struct ChainkitEnsemble *ens,
                                                      double beta,
                                                      double p,
                                                      struct ChainkitEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHAINKIT_H */
