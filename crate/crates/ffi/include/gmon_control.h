/* SPDX-License-Identifier: Apache-2.0 */

#ifndef GMON_CONTROL_H
#define GMON_CONTROL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum GmonStatus {
  GMON_STATUS_OK = 0,
  /**
   * A parameter violated its precondition.
   */
  GMON_STATUS_INVALID_ARGUMENT = 1,
  /**
   * A required pointer was null.
   */
  GMON_STATUS_NULL_POINTER = 2,
  /**
   * A numerical routine failed (no root, no convergence, target unreachable).
   */
  GMON_STATUS_NUMERICAL = 3,
  /**
   * Reading or writing failed.
   */
  GMON_STATUS_IO = 4,
  /**
   * The library panicked; this is a bug.
   */
  GMON_STATUS_PANIC = 5,
} GmonStatus;

/**
 * Control regime of a switching-function sample.
 */
typedef enum GmonRegime {
  GMON_REGIME_BANG0 = 0,
  GMON_REGIME_BANG1 = 1,
  GMON_REGIME_SINGULAR = 2,
} GmonRegime;

/**
 * Opaque piecewise-constant protocol.
 */
typedef struct GmonProtocol GmonProtocol;

/**
 * Opaque sampled switching function.
 */
typedef struct GmonSwitchingTrace GmonSwitchingTrace;

/**
 * Optimal one-switch schedule at a fixed total time.
 */
typedef struct GmonBangBang {
  double tau;
  double error;
  /**
   * Time at which the field is switched on.
   */
  double t_b;
  /**
   * Time at which the coupling is switched off.
   */
  double t_j;
} GmonBangBang;

/**
 * Minimum-time search result.
 */
typedef struct GmonMinTime {
  double tau_star;
  double tau_0;
  double bracket_width;
} GmonMinTime;

/**
 * Monte Carlo statistics of the error under timing jitter.
 */
typedef struct GmonRobustness {
  double epsilon;
  double mean_error;
  double std_error;
  uint64_t n_samples;
  uint64_t seed;
} GmonRobustness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *gmon_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gmon_version(void);

/**
 * Builds a protocol from `n` segments.
 *
 * # Safety
 * `durations`, `b` and `j` must each point to `n` readable doubles;
 * `out` must be writable.
 */
enum GmonStatus gmon_protocol_new(int case_sign,
                                  const double *durations,
                                  const double *b,
                                  const double *j,
                                  size_t n,
                                  struct GmonProtocol **out_protocol);

/**
 * Parses a protocol from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_protocol` must be writable.
 */
enum GmonStatus gmon_protocol_from_json(const char *json, struct GmonProtocol **out_protocol);

/**
 * Serializes a protocol to JSON. Release the string with [`gmon_string_free`].
 *
 * # Safety
 * `protocol` must be a live handle; `out_json` must be writable.
 */
enum GmonStatus gmon_protocol_to_json(const struct GmonProtocol *protocol, char **out_json);

/**
 * Total duration and segment count.
 *
 * # Safety
 * `protocol` must be a live handle; the out-pointers must be writable.
 */
enum GmonStatus gmon_protocol_shape(const struct GmonProtocol *protocol,
                                    double *out_tau,
                                    size_t *out_len);

/**
 * Copies segment `index` as `(duration, b, j)`.
 *
 * # Safety
 * `protocol` must be a live handle; the out-pointers must be writable.
 */
enum GmonStatus gmon_protocol_segment(const struct GmonProtocol *protocol,
                                      size_t index,
                                      double *out_duration,
                                      double *out_b,
                                      double *out_j);

/**
 * Error `1 − |⟨singlet|ψ(τ)⟩|²` reached from the case's initial ground state.
 *
 * # Safety
 * `protocol` must be a live handle; `out_error` must be writable.
 */
enum GmonStatus gmon_protocol_error(const struct GmonProtocol *protocol, double *out_error);

/**
 * Evolves a state through the protocol. States are four amplitudes in the
 * basis (↑↑, ↑↓, ↓↑, ↓↓), split into real and imaginary parts; the output
 * arrays may alias the inputs.
 *
 * # Safety
 * `protocol` must be a live handle; each array must hold four doubles.
 */
enum GmonStatus gmon_evolve(const struct GmonProtocol *protocol,
                            const double *re_in,
                            const double *im_in,
                            double *re_out,
                            double *im_out);

/**
 * Releases a protocol. Null is ignored.
 *
 * # Safety
 * `protocol` must be null or a handle not yet freed.
 */
void gmon_protocol_free(struct GmonProtocol *protocol);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void gmon_string_free(char *s);

/**
 * Optimal one-switch schedule at total time `tau`. When `out_protocol` is
 * non-null it receives the schedule as a protocol handle.
 *
 * # Safety
 * `out` must be writable; `out_protocol` must be null or writable.
 */
enum GmonStatus gmon_optimize_bang_bang(double tau,
                                        int case_sign,
                                        struct GmonBangBang *out_result,
                                        struct GmonProtocol **out_protocol);

/**
 * Multistart optimization over `n_segments` piecewise-constant controls.
 *
 * # Safety
 * `out_error` must be writable; `out_protocol` must be null or writable.
 */
enum GmonStatus gmon_optimize_pwc(double tau,
                                  size_t n_segments,
                                  int case_sign,
                                  size_t restarts,
                                  uint64_t seed,
                                  double *out_error,
                                  struct GmonProtocol **out_protocol);

/**
 * Shortest total time whose optimal error is below `threshold`.
 *
 * # Safety
 * `out_result` must be writable.
 */
enum GmonStatus gmon_min_time_search(int case_sign,
                                     double threshold,
                                     double resolution,
                                     struct GmonMinTime *out_result);

/**
 * Field switch-on time satisfying the optimality condition at total time `tau`
 * (opposite fields).
 *
 * # Safety
 * `out_t_b` must be writable.
 */
enum GmonStatus gmon_solve_switching_time(double tau, double *out_t_b);

/**
 * Samples the switching function of the one-switch schedule on `n_grid` points.
 *
 * # Safety
 * `out_trace` must be writable.
 */
enum GmonStatus gmon_switching_trace_new(double tau,
                                         double t_b,
                                         size_t n_grid,
                                         struct GmonSwitchingTrace **out_trace);

/**
 * Number of samples in a trace.
 *
 * # Safety
 * `trace` must be a live handle; `out_len` must be writable.
 */
enum GmonStatus gmon_switching_trace_len(const struct GmonSwitchingTrace *trace, size_t *out_len);

/**
 * Sample `index` of a trace: time, switching value and regime.
 *
 * # Safety
 * `trace` must be a live handle; the out-pointers must be writable.
 */
enum GmonStatus gmon_switching_trace_sample(const struct GmonSwitchingTrace *trace,
                                            size_t index,
                                            double *out_t,
                                            double *out_s,
                                            enum GmonRegime *out_regime);

/**
 * Releases a trace. Null is ignored.
 *
 * # Safety
 * `trace` must be null or a handle not yet freed.
 */
void gmon_switching_trace_free(struct GmonSwitchingTrace *trace);

/**
 * Error statistics of the two-segment schedule (field-off for `first`,
 * then both on for `second`) when each of the three switching instants is
 * shifted by an independent uniform offset in `[−ε/2, ε/2]`. Deterministic
 * for a given seed.
 *
 * # Safety
 * `out_stats` must be writable.
 */
enum GmonStatus gmon_monte_carlo(double first,
                                 double second,
                                 double epsilon,
                                 size_t n_samples,
                                 uint64_t seed,
                                 struct GmonRobustness *out_stats);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GMON_CONTROL_H */
