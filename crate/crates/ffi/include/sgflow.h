#ifndef SGFLOW_H
#define SGFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of the C interface.
typedef enum {
  SGFLOW_STATUS_OK = 0,
  SGFLOW_STATUS_INVALID_ARGUMENT = 1,
  SGFLOW_STATUS_DIVERGENCE = 2,
  SGFLOW_STATUS_INSUFFICIENT_REPLICATES = 3,
  SGFLOW_STATUS_DEGENERATE_DENSITY = 4,
  SGFLOW_STATUS_THRESHOLD_DIVERGENCE = 5,
  SGFLOW_STATUS_EVALUATION = 6,
  SGFLOW_STATUS_CONFIG = 7,
  SGFLOW_STATUS_IO = 8,
  SGFLOW_STATUS_NULL_POINTER = 9,
  SGFLOW_STATUS_PANIC = 10,
} SgflowStatus;

// Opaque weak-features instance.
typedef struct SgflowInstance SgflowInstance;

// Opaque exactly solvable linear SDE `dw = h(τ)(y - w)dτ + √γ σ(τ)dη`.
typedef struct SgflowLinearSde SgflowLinearSde;

// Large-system parameters (`p/n → alpha`, `d/n → psi`).
typedef struct {
  double alpha;
  double psi;
  double mu;
  double gamma_prime;
  double norm_beta_sq;
  double delta_sq;
} SgflowAsymptoticParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next call into the library from the same thread.
const char *sgflow_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sgflow_version(void);

// Defaults: alpha 0.5, psi 2.5, mu 0.5, gamma' 1, ‖β‖² 1, ‖β-β̂⁰‖² 2.
SgflowAsymptoticParams sgflow_asymptotic_params_default(void);

// Marchenko–Pastur density; 0 outside the support or for invalid alpha.
double sgflow_mp_density(double alpha, double sigma);

// `K(t, s1, s2) = (e^{-2 s1 t} - e^{-2 s2 t}) / (2 (s2 - s1))`.
double sgflow_kernel_k(double t, double s1, double s2);

// Asymptotic GF test risk at time `t` (`t = INFINITY` gives the limit).
SgflowStatus sgflow_gf_risk_asymptotic(const SgflowAsymptoticParams *params, double t, double *out);

// Asymptotic SGF correction at time `t` (`t = INFINITY` gives the limit).
SgflowStatus sgflow_sgf_correction_asymptotic(const SgflowAsymptoticParams *params,
                                              double t,
                                              double *out);

// Infinite-time GF risk; fails with `ThresholdDivergence` at alpha = 1.
SgflowStatus sgflow_gf_risk_limit(const SgflowAsymptoticParams *params, double *out);

// Infinite-time SGF correction `(γ'/4)(α/ψ)U max(0, 1-α)`.
SgflowStatus sgflow_sgf_correction_limit(const SgflowAsymptoticParams *params, double *out);

// Finite-size expected GF risk over `replicates` sampled spectra.
SgflowStatus sgflow_expected_gf_risk_finite(size_t n,
                                            size_t d,
                                            size_t p,
                                            double mu,
                                            double gamma,
                                            double t,
                                            size_t replicates,
                                            uint64_t seed,
                                            double *value,
                                            double *stderr);

// Finite-size expected SGF correction.
SgflowStatus sgflow_expected_sgf_correction_finite(size_t n,
                                                   size_t d,
                                                   size_t p,
                                                   double mu,
                                                   double gamma,
                                                   double t,
                                                   size_t replicates,
                                                   size_t quad_panels,
                                                   uint64_t seed,
                                                   double *value,
                                                   double *stderr);

// Draws an instance with unit-sphere `β`, `β̂⁰`.
SgflowStatus sgflow_instance_new(size_t n,
                                 size_t d,
                                 size_t p,
                                 double mu,
                                 uint64_t seed,
                                 SgflowInstance **out);

// Releases an instance; NULL is ignored.
void sgflow_instance_free(SgflowInstance *inst);

// Sizes `n`, `d`, `p` of an instance.
SgflowStatus sgflow_instance_dims(const SgflowInstance *inst, size_t *n, size_t *d, size_t *p);

// Test risk of the GF estimator at time `t` started from `β̂⁰_A`.
SgflowStatus sgflow_instance_gf_risk(const SgflowInstance *inst, double t, double *out);

// Trace of the fluctuation covariance along the GF path from `β̂⁰_A`.
SgflowStatus sgflow_instance_covariance_trace(const SgflowInstance *inst,
                                              double t,
                                              size_t quad_panels,
                                              double *out);

// Constant coefficients `h = a`, `σ = b`.
SgflowStatus sgflow_linear_sde_constant(double a,
                                        double b,
                                        double y,
                                        double w0,
                                        double gamma,
                                        SgflowLinearSde **out);

// `h = 1`, `σ(s) = e^{-s}`.
SgflowStatus sgflow_linear_sde_pinning(double y, double w0, double gamma, SgflowLinearSde **out);

// `h(s) = 1 + s/2`, `σ(s) = 1/(1 + s)`.
SgflowStatus sgflow_linear_sde_time_varying(double y,
                                            double w0,
                                            double gamma,
                                            SgflowLinearSde **out);

// Releases a linear SDE; NULL is ignored.
void sgflow_linear_sde_free(SgflowLinearSde *sde);

// Exact mean and variance at time `t`.
SgflowStatus sgflow_linear_sde_exact(const SgflowLinearSde *sde,
                                     double t,
                                     double *mean,
                                     double *var);

// Mean and variance from the fluctuation engine with `steps` flow steps.
SgflowStatus sgflow_linear_sde_engine(const SgflowLinearSde *sde,
                                      double t,
                                      size_t steps,
                                      double *mean,
                                      double *var);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGFLOW_H */
