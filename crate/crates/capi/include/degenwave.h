/* C interface to the degenwave transmission-system laboratory. */

#ifndef DEGENWAVE_H
#define DEGENWAVE_H

/* Generated from the Rust sources by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Decay laws for [`degenwave_fit_decay`].
 */
typedef enum DegenwaveDecayKind {
  /**
   * E(t) ≈ amplitude · t^(−rate).
   */
  DEGENWAVE_DECAY_KIND_POLYNOMIAL = 0,
  /**
   * E(t) ≈ amplitude · exp(−rate · t).
   */
  DEGENWAVE_DECAY_KIND_EXPONENTIAL = 1,
} DegenwaveDecayKind;

/**
 * Degeneracy classification of the wave coefficient a.
 */
typedef enum DegenwaveDegeneracyClass {
  /**
   * a bounded away from zero.
   */
  DEGENWAVE_DEGENERACY_CLASS_NON_DEGENERATE = 0,
  /**
   * Degeneracy exponent K_a in (0, 1).
   */
  DEGENWAVE_DEGENERACY_CLASS_WEAKLY_DEGENERATE = 1,
  /**
   * Degeneracy exponent K_a in [1, 2).
   */
  DEGENWAVE_DEGENERACY_CLASS_STRONGLY_DEGENERATE = 2,
  /**
   * Degeneracy exponent K_a ≥ 2: outside the supported theory.
   */
  DEGENWAVE_DEGENERACY_CLASS_UNSUPPORTED = 3,
} DegenwaveDegeneracyClass;

/**
 * Initial-data presets for [`degenwave_simulate`].
 */
typedef enum DegenwavePreset {
  /**
   * Identically zero state.
   */
  DEGENWAVE_PRESET_ZERO = 0,
  /**
   * Plucked wave displacement, zero elsewhere.
   */
  DEGENWAVE_PRESET_PLUCK = 1,
  /**
   * Thermal bump, zero wave data.
   */
  DEGENWAVE_PRESET_THERMAL = 2,
} DegenwavePreset;

/**
 * Status code returned by every fallible entry point.
 */
typedef enum DegenwaveStatus {
  /**
   * Success.
   */
  DEGENWAVE_STATUS_OK = 0,
  /**
   * A pointer, range, or hypothesis precondition was violated.
   */
  DEGENWAVE_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The computation broke down numerically (singular or near-singular
   * system, non-positive energy in a log fit).
   */
  DEGENWAVE_STATUS_NUMERICAL_FAILURE = 2,
  /**
   * An internal invariant failed; the library state is still consistent.
   */
  DEGENWAVE_STATUS_PANIC = 3,
} DegenwaveStatus;

/**
 * Opaque discretized transmission system.
 */
typedef struct DegenwaveSystem DegenwaveSystem;

/**
 * Opaque simulation trace: sampled times, energies, and dissipations.
 */
typedef struct DegenwaveTrace DegenwaveTrace;

/**
 * Construction parameters for [`degenwave_system_new`].
 *
 * Non-positive `wave_grading` selects the class-based default (2 for
 * degenerate coefficients, 1 otherwise); non-positive `eps_tail` selects
 * 1e−8.
 */
typedef struct DegenwaveSystemParams {
  /**
   * Exponent of a(x) = x^p, p ≥ 0.
   */
  double a_exponent;
  /**
   * Amplitude of b(x) = c_b·x^q.
   */
  double b_amplitude;
  /**
   * Exponent of b(x) = c_b·x^q, q ≥ 0.
   */
  double b_exponent;
  /**
   * Memory-kernel decay rate k > 0.
   */
  double kernel_rate;
  /**
   * Thermal conductivity c > 0.
   */
  double conductivity;
  /**
   * Memory weight m in [0, 1].
   */
  double memory_weight;
  /**
   * Wave mesh grading exponent (≥ 1), or ≤ 0 for the default.
   */
  double wave_grading;
  /**
   * History truncation tail mass in (0, 1), or ≤ 0 for 1e−8.
   */
  double eps_tail;
  /**
   * Wave cells, ≥ 2.
   */
  size_t wave_cells;
  /**
   * Heat cells, ≥ 2.
   */
  size_t heat_cells;
  /**
   * History slices, ≥ 2.
   */
  size_t history_nodes;
} DegenwaveSystemParams;

/**
 * Coefficient-hypothesis verdict (see [`degenwave_check_hypotheses`]).
 */
typedef struct DegenwaveHypothesisVerdict {
  /**
   * Degeneracy exponent K_a of a near x = 0.
   */
  double k_a;
  /**
   * First drift functional M₁.
   */
  double drift_m1;
  /**
   * Second drift functional M₂.
   */
  double drift_m2;
  /**
   * Classification of a.
   */
  enum DegenwaveDegeneracyClass class_;
  /**
   * Whether b/a is integrable near the degenerate endpoint.
   */
  bool b_over_a_integrable;
  /**
   * The drift smallness condition M₁ < 1 + K_a/2, M₂ < 1 − K_a/2.
   */
  bool condition1_holds;
} DegenwaveHypothesisVerdict;

/**
 * Fitted decay law (see [`degenwave_fit_decay`]).
 */
typedef struct DegenwaveDecayFit {
  /**
   * Decay rate (exponential) or exponent magnitude (polynomial).
   */
  double rate;
  /**
   * Fitted amplitude at the window origin.
   */
  double amplitude;
  /**
   * Coefficient of determination of the log-linear fit.
   */
  double r_squared;
  /**
   * Number of samples inside the fit window.
   */
  size_t samples;
} DegenwaveDecayFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *degenwave_version(void);

/**
 * Message for the most recent failure on the calling thread. The pointer
 * stays valid until the next failing call on this thread.
 */
const char *degenwave_last_error_message(void);

/**
 * Fill `out` with the weakly degenerate default configuration
 * (a = x^0.5, b = 0.2·x^0.5, k = c = 1, m = ½, 64/64/64 mesh).
 */
enum DegenwaveStatus degenwave_system_params_default(struct DegenwaveSystemParams *out);

/**
 * Assemble a discretized system. On success `*out` owns the handle; release
 * it with [`degenwave_system_free`].
 */
enum DegenwaveStatus degenwave_system_new(const struct DegenwaveSystemParams *params,
                                          struct DegenwaveSystem **out);

/**
 * Release a system handle. `NULL` is ignored.
 */
void degenwave_system_free(struct DegenwaveSystem *system);

/**
 * Total number of unknowns, or 0 for a null handle.
 */
size_t degenwave_system_dim(const struct DegenwaveSystem *system);

/**
 * Stability-scaled default time step, or 0 for a null handle.
 */
double degenwave_system_default_dt(const struct DegenwaveSystem *system);

/**
 * Energy ½‖U‖²_M of a state vector of length [`degenwave_system_dim`].
 */
enum DegenwaveStatus degenwave_system_energy(const struct DegenwaveSystem *system,
                                             const double *state,
                                             size_t len,
                                             double *out_energy);

/**
 * Validate the coefficient hypotheses for a power-law pair.
 */
enum DegenwaveStatus degenwave_check_hypotheses(double a_exponent,
                                                double b_amplitude,
                                                double b_exponent,
                                                struct DegenwaveHypothesisVerdict *out);

/**
 * Integrate the semigroup by Crank–Nicolson. Non-positive `dt` selects the
 * system default. On success `*out` owns the trace handle; release it with
 * [`degenwave_trace_free`].
 */
enum DegenwaveStatus degenwave_simulate(const struct DegenwaveSystem *system,
                                        enum DegenwavePreset preset,
                                        double dt,
                                        double t_final,
                                        size_t record_stride,
                                        struct DegenwaveTrace **out);

/**
 * Release a trace handle. `NULL` is ignored.
 */
void degenwave_trace_free(struct DegenwaveTrace *trace);

/**
 * Number of recorded samples, or 0 for a null handle.
 */
size_t degenwave_trace_len(const struct DegenwaveTrace *trace);

/**
 * Sampled times; valid while the trace handle lives. `NULL` for a null
 * handle.
 */
const double *degenwave_trace_times(const struct DegenwaveTrace *trace);

/**
 * Sampled energies E(tₙ); same lifetime as the handle.
 */
const double *degenwave_trace_energy(const struct DegenwaveTrace *trace);

/**
 * Sampled dissipation functionals D(tₙ); same lifetime as the handle.
 */
const double *degenwave_trace_dissipation(const struct DegenwaveTrace *trace);

/**
 * Dense spectral certificate: abscissa and distance of the spectrum to the
 * imaginary axis.
 */
enum DegenwaveStatus degenwave_spectral_abscissa(const struct DegenwaveSystem *system,
                                                 double *out_abscissa,
                                                 double *out_axis_distance);

/**
 * Resolvent norm ‖(iλ − A)⁻¹‖ in the energy norm.
 */
enum DegenwaveStatus degenwave_resolvent_norm(const struct DegenwaveSystem *system,
                                              double lambda,
                                              double *out_norm);

/**
 * Fit the resolvent growth exponent over a log-spaced sweep of
 * λ ∈ [lambda_min, lambda_max]. With `refined` set, each grid point also
 * samples the nearest located resonance inside its grid cell.
 */
enum DegenwaveStatus degenwave_resolvent_growth(const struct DegenwaveSystem *system,
                                                double lambda_min,
                                                double lambda_max,
                                                size_t points,
                                                bool refined,
                                                double *out_exponent,
                                                double *out_r_squared);

/**
 * Fit a decay law to (time, energy) samples over the window
 * [t_lo, t_hi].
 */
enum DegenwaveStatus degenwave_fit_decay(const double *times,
                                         const double *energies,
                                         size_t len,
                                         enum DegenwaveDecayKind kind,
                                         double t_lo,
                                         double t_hi,
                                         struct DegenwaveDecayFit *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DEGENWAVE_H */
