#ifndef RABI_LAB_H
#define RABI_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  /**
   * Rejected input; nothing was computed.
   */
  RL_STATUS_INVALID_PARAMETER = 2,
  /**
   * The computation ran and failed (no bracket, ill-conditioned, ...).
   */
  RL_STATUS_NUMERICAL_ERROR = 3,
  /**
   * A Rust panic was caught at the boundary.
   */
  RL_STATUS_PANIC = 4,
} RlStatus;

/**
 * Resonance kinds accepted by [`rl_find_resonance`].
 */
typedef enum RlResonanceKind {
  RL_RESONANCE_KIND_BS = 0,
  RL_RESONANCE_KIND_TC = 1,
  RL_RESONANCE_KIND_FC = 2,
  RL_RESONANCE_KIND_RC = 3,
  RL_RESONANCE_KIND_EN = 4,
  RL_RESONANCE_KIND_VS = 5,
  RL_RESONANCE_KIND_WS = 6,
} RlResonanceKind;

/**
 * Opaque solved Floquet problem.
 */
typedef struct RlFloquet RlFloquet;

/**
 * Splitting of a wave packet centered on `zeta` into two fragments.
 */
typedef struct RlSplitting {
  double velocity_re;
  double velocity_im;
  /**
   * Polarization axis n of the fragments.
   */
  double direction[3];
  /**
   * `(1 + p.n)/2`.
   */
  double weight_plus;
  /**
   * `(1 - p.n)/2`.
   */
  double weight_minus;
  /**
   * `|v||zeta|/(epsilon mu)`, 1 in the rotating-wave limit.
   */
  double speed_ratio;
} RlSplitting;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Solves the Floquet problem for detuning `delta`, drive `mu` and
 * truncation `n_max` (0 selects the library default). On success `*out`
 * owns a handle to release with [`rl_floquet_free`].
 *
 * # Safety
 * `out` must be null or valid for writing one pointer.
 */
enum RlStatus rl_floquet_solve(double delta, double mu, uint32_t n_max, struct RlFloquet **out);

/**
 * Releases a handle from [`rl_floquet_solve`]. Null is ignored.
 *
 * # Safety
 * `handle` must be null or a live handle not freed before.
 */
void rl_floquet_free(struct RlFloquet *handle);

/**
 * # Safety
 * `handle` must be a live handle; `out` must be valid for one double.
 */
enum RlStatus rl_floquet_rabi_frequency(const struct RlFloquet *handle, double *out);

/**
 * Rotation `O(t)` carrying the initial Bloch vector to the one at time t.
 *
 * # Safety
 * `handle` must be a live handle; `out` must be valid for nine doubles.
 */
enum RlStatus rl_floquet_o_matrix(const struct RlFloquet *handle, double t, double *out);

/**
 * Long-time part `Q(t)` of the rotation, periodic in t.
 *
 * # Safety
 * `handle` must be a live handle; `out` must be valid for nine doubles.
 */
enum RlStatus rl_floquet_q_matrix(const struct RlFloquet *handle, double t, double *out);

/**
 * Resonant detuning of `kind` (an [`RlResonanceKind`] value) at drive `mu`.
 * `value_at_res` may be null.
 *
 * # Safety
 * `delta_res` must be valid for one double; `value_at_res` null or valid.
 */
enum RlStatus rl_find_resonance(int32_t kind,
                                double mu,
                                uint32_t n_max,
                                double *delta_res,
                                double *value_at_res);

/**
 * Drift velocity, axis and weights of the two fragments of a coherent
 * packet centered on `zeta` with initial Bloch vector `p[3]`.
 *
 * # Safety
 * `handle` must be a live handle, `p` valid for three doubles and `out`
 * valid for one [`RlSplitting`].
 */
enum RlStatus rl_splitting(const struct RlFloquet *handle,
                           double zeta_re,
                           double zeta_im,
                           double epsilon,
                           const double *p,
                           struct RlSplitting *out);

/**
 * Collapse time of the Rabi oscillations for a coherent packet.
 *
 * # Safety
 * `handle` must be a live handle, `p` valid for three doubles and `out`
 * valid for one double.
 */
enum RlStatus rl_collapse_time(const struct RlFloquet *handle,
                               double zeta_re,
                               double zeta_im,
                               double epsilon,
                               const double *p,
                               double *out);

/**
 * Copies the last error message of this thread into `buf` as a
 * NUL-terminated string, truncating to `len - 1` bytes. Returns the full
 * message length excluding the terminator; 0 means no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t rl_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RABI_LAB_H */
