use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::system::SdeSystem;
use crate::quadrature::adaptive;
use crate::{Error, Result};

/// Shareable scalar function of time.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The exactly solvable SDE `dw = h(τ)(y - w) dτ + √γ σ(τ) dη`.
#[derive(Clone)]
pub struct LinearSde1d {
    pub h: ScalarFn,
    pub sigma: ScalarFn,
    /// Optional closed form of `∫_{t0}^{s} h`; otherwise it is integrated
    /// numerically.
    pub h_integral: Option<ScalarFn>,
    pub y: f64,
    pub w0: f64,
    pub t0: f64,
    pub gamma: f64,
}

impl std::fmt::Debug for LinearSde1d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearSde1d")
            .field("y", &self.y)
            .field("w0", &self.w0)
            .field("t0", &self.t0)
            .field("gamma", &self.gamma)
            .field("closed_form_h_integral", &self.h_integral.is_some())
            .finish()
    }
}

impl LinearSde1d {
    pub fn new(
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        y: f64,
        w0: f64,
        t0: f64,
        gamma: f64,
    ) -> Self {
        LinearSde1d {
            h: Arc::new(h),
            sigma: Arc::new(sigma),
            h_integral: None,
            y,
            w0,
            t0,
            gamma,
        }
    }

    pub fn with_h_integral(mut self, hi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.h_integral = Some(Arc::new(hi));
        self
    }

    /// Constant coefficients `h = a`, `σ = b` (an Ornstein–Uhlenbeck process).
    pub fn constant(a: f64, b: f64, y: f64, w0: f64, gamma: f64) -> Self {
        LinearSde1d::new(move |_| a, move |_| b, y, w0, 0.0, gamma).with_h_integral(move |s| a * s)
    }

    /// `h = 1`, `σ(s) = e^{-s}`: square-integrable noise, variance pinned to 0.
    pub fn pinning(y: f64, w0: f64, gamma: f64) -> Self {
        LinearSde1d::new(|_| 1.0, |s: f64| (-s).exp(), y, w0, 0.0, gamma).with_h_integral(|s| s)
    }

    /// `h(s) = 1 + s/2`, `σ(s) = 1/(1 + s)`.
    pub fn time_varying(y: f64, w0: f64, gamma: f64) -> Self {
        LinearSde1d::new(|s| 1.0 + 0.5 * s, |s| 1.0 / (1.0 + s), y, w0, 0.0, gamma)
            .with_h_integral(|s| s + 0.25 * s * s)
    }

    /// `∫_{t0}^{s} h`.
    pub fn h_integral_at(&self, s: f64) -> f64 {
        match &self.h_integral {
            Some(hi) => hi(s) - hi(self.t0),
            None => adaptive(self.t0, s, 1e-15, 1e-14, |u| (self.h)(u)).value,
        }
    }
}

impl SdeSystem for LinearSde1d {
    fn dim_state(&self) -> usize {
        1
    }
    fn dim_noise(&self) -> usize {
        1
    }
    fn drift(&self, tau: f64, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, (self.h)(tau) * (self.y - w[0]))
    }
    fn diffusion(&self, tau: f64, _w: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, (self.sigma)(tau))
    }
    fn jacobian(&self, tau: f64, _w: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, -(self.h)(tau)))
    }
    fn is_gradient_flow(&self) -> bool {
        // Φ(τ, w) = h(τ)(w - y)²/2
        true
    }
}

/// Exact mean `y + (w0 - y)e^{-∫h}` and variance
/// `γ ∫ σ(u)² e^{-2∫_u^t h} du` at time `t`, the latter to absolute accuracy
/// `1e-10` (tightened to `1e-12` relative for small variances).
pub fn linear_sde_exact(sde: &LinearSde1d, t: f64) -> Result<(f64, f64)> {
    let (mean, first) = linear_sde_exact_with_tol(sde, t, 1e-10, 0.0)?;
    let tight = 1e-10f64.min(1e-12 * first.abs());
    if tight < 1e-10 && tight > 0.0 {
        let (_, var) = linear_sde_exact_with_tol(sde, t, tight, 0.0)?;
        return Ok((mean, var));
    }
    Ok((mean, first))
}

/// [`linear_sde_exact`] with explicit quadrature tolerances on the variance.
pub fn linear_sde_exact_with_tol(
    sde: &LinearSde1d,
    t: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    if t < sde.t0 || !t.is_finite() {
        return Err(Error::arg(format!(
            "time must be finite and at least t0 = {}, got {t}",
            sde.t0
        )));
    }
    let ht = sde.h_integral_at(t);
    let mean = sde.y + (sde.w0 - sde.y) * (-ht).exp();
    if t == sde.t0 || sde.gamma == 0.0 {
        return Ok((mean, 0.0));
    }
    let integrand = |u: f64| {
        let s = (sde.sigma)(u);
        s * s * (-2.0 * (ht - sde.h_integral_at(u))).exp()
    };
    let q = adaptive(sde.t0, t, abs_tol / sde.gamma, rel_tol, integrand);
    Ok((mean, sde.gamma * q.value))
}
