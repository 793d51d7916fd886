#ifndef STOCHAD_H
#define STOCHAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StochadStatus {
  STOCHAD_STATUS_OK = 0,
  STOCHAD_STATUS_NULL_POINTER = 1,
  STOCHAD_STATUS_INVALID_ARGUMENT = 2,
  STOCHAD_STATUS_DOMAIN = 3,
  STOCHAD_STATUS_NON_FINITE = 4,
  STOCHAD_STATUS_CONTRACT = 5,
  STOCHAD_STATUS_INDEX = 6,
  STOCHAD_STATUS_EVALUATION = 7,
  STOCHAD_STATUS_UNSUPPORTED = 8,
  STOCHAD_STATUS_NUMERICAL = 9,
  STOCHAD_STATUS_UNKNOWN_VALUE = 10,
  STOCHAD_STATUS_PANIC = 11,
} StochadStatus;

typedef enum StochadMode {
  STOCHAD_MODE_RIGHT = 0,
  STOCHAD_MODE_LEFT = 1,
} StochadMode;

typedef enum StochadBinaryOp {
  STOCHAD_BINARY_OP_ADD = 0,
  STOCHAD_BINARY_OP_SUB = 1,
  STOCHAD_BINARY_OP_MUL = 2,
  STOCHAD_BINARY_OP_DIV = 3,
} StochadBinaryOp;

typedef enum StochadFamily {
  STOCHAD_FAMILY_BERNOULLI = 0,
  STOCHAD_FAMILY_BINOMIAL = 1,
  STOCHAD_FAMILY_GEOMETRIC = 2,
  STOCHAD_FAMILY_POISSON = 3,
} StochadFamily;

/**
 * Opaque tracer handle.
 */
typedef struct StochadTracer StochadTracer;

/**
 * Index of a triple inside its tracer's arena.
 */
typedef uint32_t StochadValueId;

/**
 * Read-only view of a triple. `has_perturbation == 0` leaves the three
 * perturbation fields at zero. `tag` is only meaningful within one tracer.
 */
typedef struct StochadTriple {
  double value;
  double delta;
  uint8_t has_perturbation;
  double perturbation_delta;
  double perturbation_weight;
  uint64_t tag;
} StochadTriple;

typedef struct StochadSummary {
  double mean;
  double std_error;
  double variance;
  uint64_t n;
  uint64_t seed;
  double seconds;
} StochadSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *stochad_last_error_message(void);

/**
 * Create a tracer for replicate `replicate` of `seed`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum StochadStatus stochad_tracer_new(uint64_t seed,
                                      uint64_t replicate,
                                      enum StochadMode mode,
                                      struct StochadTracer **out);

/**
 * # Safety
 * `tracer` must be null or a handle from [`stochad_tracer_new`] not yet freed.
 */
void stochad_tracer_free(struct StochadTracer *tracer);

/**
 * The differentiated input `(p, 1, none)`.
 *
 * # Safety
 * `tracer` must be a live handle and `out` writable.
 */
enum StochadStatus stochad_input(struct StochadTracer *tracer, double p, StochadValueId *out);

/**
 * # Safety
 * `tracer` must be a live handle and `out` writable.
 */
enum StochadStatus stochad_constant(struct StochadTracer *tracer, double c, StochadValueId *out);

/**
 * # Safety
 * `tracer` must be a live handle and `out` writable.
 */
enum StochadStatus stochad_binary(struct StochadTracer *tracer,
                                  enum StochadBinaryOp op,
                                  StochadValueId a,
                                  StochadValueId b,
                                  StochadValueId *out);

/**
 * `c·a`.
 *
 * # Safety
 * `tracer` must be a live handle and `out` writable.
 */
enum StochadStatus stochad_scale(struct StochadTracer *tracer,
                                 StochadValueId a,
                                 double c,
                                 StochadValueId *out);

/**
 * Draw from a discrete family whose parameter is the value `param`.
 * `trials` is read only for the binomial.
 *
 * # Safety
 * `tracer` must be a live handle and `out` writable.
 */
enum StochadStatus stochad_sample(struct StochadTracer *tracer,
                                  enum StochadFamily family,
                                  uint64_t trials,
                                  StochadValueId param,
                                  StochadValueId *out);

/**
 * Current state of a value, with pruned perturbations removed.
 *
 * # Safety
 * `tracer` must be a live handle and `out` writable.
 */
enum StochadStatus stochad_value_get(struct StochadTracer *tracer,
                                     StochadValueId id,
                                     struct StochadTriple *out);

/**
 * `δ + sign·w·Δ` for the value, a single-sample derivative estimate when
 * the value is a program output.
 *
 * # Safety
 * `tracer` must be a live handle and `out` writable.
 */
enum StochadStatus stochad_derivative_contribution(struct StochadTracer *tracer,
                                                   StochadValueId id,
                                                   double *out);

/**
 * Triple-estimator mean derivative of the toy program at `p`.
 *
 * # Safety
 * `out` must be writable.
 */
enum StochadStatus stochad_toy_derivative(double p,
                                          uint64_t seed,
                                          uint64_t samples,
                                          uint32_t threads,
                                          enum StochadMode mode,
                                          struct StochadSummary *out);

/**
 * Triple-estimator derivative of `E[x_n²]` for the inhomogeneous walk.
 *
 * # Safety
 * `out` must be writable.
 */
enum StochadStatus stochad_walk_derivative(uint32_t n,
                                           double p,
                                           uint64_t seed,
                                           uint64_t samples,
                                           uint32_t threads,
                                           enum StochadMode mode,
                                           struct StochadSummary *out);

/**
 * Triple-estimator derivative of the living-cell count of the stochastic
 * Game of Life.
 *
 * # Safety
 * `out` must be writable.
 */
enum StochadStatus stochad_life_derivative(uint32_t board_size,
                                           uint32_t steps,
                                           double p,
                                           uint64_t seed,
                                           uint64_t samples,
                                           uint32_t threads,
                                           enum StochadMode mode,
                                           struct StochadSummary *out);

/**
 * Smoothed derivative of `E[Geo(p)³]`, biased through the cube.
 *
 * # Safety
 * `out` must be writable.
 */
enum StochadStatus stochad_geometric_cube_smoothed(double p,
                                                   uint64_t seed,
                                                   uint64_t samples,
                                                   uint32_t threads,
                                                   enum StochadMode mode,
                                                   struct StochadSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STOCHAD_H */
