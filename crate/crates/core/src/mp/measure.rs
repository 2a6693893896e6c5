use std::f64::consts::PI;

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Default Gauss–Legendre node count for Marchenko–Pastur integrals.
pub const DEFAULT_NODES: usize = 400;
const MAX_NODES: usize = 25_600;
const CONVERGENCE_TOL: f64 = 1e-9;

/// The Marchenko–Pastur law with aspect ratio `α`: the limiting spectrum of
/// `(1/n) X_Aᵀ X_A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpMeasure {
    pub alpha: f64,
    /// `(1 - √α)²`
    pub lower: f64,
    /// `(1 + √α)²`
    pub upper: f64,
    /// Point mass at zero, `max(0, 1 - 1/α)`.
    pub atom_mass: f64,
    /// Mass of the absolutely continuous part, `min(1, 1/α)`.
    pub ac_mass: f64,
}

impl MpMeasure {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::arg(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        let s = alpha.sqrt();
        Ok(MpMeasure {
            alpha,
            lower: (1.0 - s).powi(2),
            upper: (1.0 + s).powi(2),
            atom_mass: (1.0 - 1.0 / alpha).max(0.0),
            ac_mass: (1.0 / alpha).min(1.0),
        })
    }

    pub fn density(&self, sigma: f64) -> f64 {
        if sigma <= self.lower || sigma >= self.upper || sigma <= 0.0 {
            return 0.0;
        }
        ((self.upper - sigma) * (sigma - self.lower)).sqrt() / (2.0 * PI * self.alpha * sigma)
    }

    /// Quadrature points `σ_k` and weights `w_k` such that
    /// `Σ w_k φ(σ_k) ≈ ∫ φ(σ) ρ_α(dσ)` over the a.c. part.
    ///
    /// The substitution `σ = m + r cos θ` turns the square-root edges into a
    /// smooth `sin² θ` factor, and Gauss–Legendre runs on `θ ∈ [0, π]`.
    pub fn nodes(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let rule = GaussLegendre::cached(n);
        let m = 0.5 * (self.upper + self.lower);
        let r = 0.5 * (self.upper - self.lower);
        let (thetas, wts) = rule.mapped(0.0, PI);
        let mut sig = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for (th, wt) in thetas.into_iter().zip(wts) {
            let s = m + r * th.cos();
            let sin = th.sin();
            sig.push(s);
            // r sinθ (density numerator) × r sinθ (Jacobian) / (2πασ)
            w.push(wt * r * r * sin * sin / (2.0 * PI * self.alpha * s));
        }
        (sig, w)
    }
}

/// Marchenko–Pastur density `ρ_α(σ)`; zero outside the support.
pub fn mp_density(alpha: f64, sigma: f64) -> f64 {
    MpMeasure::new(alpha)
        .map(|m| m.density(sigma))
        .unwrap_or(0.0)
}

/// `∫ φ(σ) ρ_α(dσ)` over the a.c. support with `quad_nodes` Gauss–Legendre
/// nodes after the cosine substitution.
pub fn mp_integral(alpha: f64, phi: impl Fn(f64) -> f64, quad_nodes: usize) -> Result<f64> {
    if quad_nodes < 16 {
        return Err(Error::arg(format!(
            "mp_integral needs at least 16 nodes, got {quad_nodes}"
        )));
    }
    let meas = MpMeasure::new(alpha)?;
    let (sig, w) = meas.nodes(quad_nodes);
    let mut acc = 0.0;
    for (s, wk) in sig.iter().zip(&w) {
        let v = phi(*s);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "integrand is not finite at sigma = {s}"
            )));
        }
        acc += wk * v;
    }
    Ok(acc)
}

/// A quadrature result with its convergence bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureValue {
    pub value: f64,
    pub nodes: usize,
    /// Whether two successive node doublings agreed to within tolerance.
    pub converged: bool,
}

/// [`mp_integral`] starting at [`DEFAULT_NODES`] and doubling until two
/// successive values differ by less than `1e-9` (relative to `max(1, |I|)`).
pub fn mp_integral_adaptive(alpha: f64, phi: impl Fn(f64) -> f64) -> Result<QuadratureValue> {
    let mut n = DEFAULT_NODES;
    let mut prev = mp_integral(alpha, &phi, n)?;
    while n < MAX_NODES {
        n *= 2;
        let next = mp_integral(alpha, &phi, n)?;
        if (next - prev).abs() < CONVERGENCE_TOL * next.abs().max(1.0) {
            return Ok(QuadratureValue {
                value: next,
                nodes: n,
                converged: true,
            });
        }
        prev = next;
    }
    Ok(QuadratureValue {
        value: prev,
        nodes: n,
        converged: false,
    })
}

/// Closed form of `α ∫ σ⁻¹ ρ_α(dσ)`: `1/(1-α) - 1` below the threshold and
/// `1/(α-1)` above it.
pub fn inverse_moment_closed_form(alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Err(Error::ThresholdDivergence);
    }
    Ok(if alpha < 1.0 {
        1.0 / (1.0 - alpha) - 1.0
    } else {
        1.0 / (alpha - 1.0)
    })
}
