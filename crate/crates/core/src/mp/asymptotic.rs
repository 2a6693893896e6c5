use serde::{Deserialize, Serialize};

use super::kernels::{f1, f2};
use super::measure::{mp_integral_adaptive, QuadratureValue};
use crate::{Error, Result};

/// Parameters of the proportional limit `p/n → α`, `d/n → ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticParams {
    pub alpha: f64,
    pub psi: f64,
    pub mu: f64,
    /// Rescaled learning rate `γ' = γ d`.
    pub gamma_prime: f64,
    /// `‖β‖²`
    #[serde(default = "one")]
    pub norm_beta_sq: f64,
    /// `‖β - β̂⁰‖²`; two independent unit vectors give 2 in the limit.
    #[serde(default = "two")]
    pub delta_sq: f64,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}

impl Default for AsymptoticParams {
    fn default() -> Self {
        AsymptoticParams {
            alpha: 0.5,
            psi: 2.5,
            mu: 0.5,
            gamma_prime: 1.0,
            norm_beta_sq: 1.0,
            delta_sq: 2.0,
        }
    }
}

impl AsymptoticParams {
    pub fn new(alpha: f64, psi: f64, mu: f64, gamma_prime: f64) -> Result<Self> {
        let p = AsymptoticParams {
            alpha,
            psi,
            mu,
            gamma_prime,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha", self.alpha),
            ("psi", self.psi),
            ("mu", self.mu),
            ("gamma_prime", self.gamma_prime),
            ("norm_beta_sq", self.norm_beta_sq),
            ("delta_sq", self.delta_sq),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::arg(format!("{name} must be finite, got {v}")));
            }
        }
        if self.alpha <= 0.0 {
            return Err(Error::arg(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.psi <= 0.0 {
            return Err(Error::arg(format!(
                "psi must be positive, got {}",
                self.psi
            )));
        }
        if self.alpha > self.psi {
            return Err(Error::arg(format!(
                "alpha must not exceed psi (p <= d), got alpha = {} > psi = {}",
                self.alpha, self.psi
            )));
        }
        if self.mu < 0.0 || self.gamma_prime < 0.0 || self.norm_beta_sq < 0.0 || self.delta_sq < 0.0
        {
            return Err(Error::arg(
                "mu, gamma_prime, norm_beta_sq and delta_sq must be non-negative",
            ));
        }
        Ok(())
    }

    /// `(1 - α/ψ)‖β‖² + μ²`: signal outside the learned subset plus noise.
    pub fn unlearnable(&self) -> f64 {
        (1.0 - self.alpha / self.psi) * self.norm_beta_sq + self.mu * self.mu
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::arg(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// Large-system GF test risk at time `t`:
/// `½{(δ²/ψ)[max(0, α-1) + α∫e^{-2σt}ρ] + U[1 + α∫(1-e^{-σt})²/σ ρ]}`,
/// with `U = (1-α/ψ)‖β‖² + μ²`. An infinite `t` gives [`gf_risk_limit`].
pub fn gf_risk_asymptotic(params: &AsymptoticParams, t: f64) -> Result<f64> {
    gf_risk_asymptotic_checked(params, t).map(|q| q.value)
}

/// [`gf_risk_asymptotic`] with quadrature convergence bookkeeping.
pub fn gf_risk_asymptotic_checked(params: &AsymptoticParams, t: f64) -> Result<QuadratureValue> {
    params.validate()?;
    check_time(t)?;
    if t.is_infinite() {
        return gf_risk_limit(params).map(|v| QuadratureValue {
            value: v,
            nodes: 0,
            converged: true,
        });
    }
    let a = params.alpha;
    let decay = mp_integral_adaptive(a, |s| (-2.0 * s * t).exp())?;
    let bias = mp_integral_adaptive(a, |s| {
        let x = s * t;
        // (1 - e^{-x})² / σ, written to stay accurate for small x
        let one_minus = -(-x).exp_m1();
        one_minus * one_minus / s
    })?;
    let value = 0.5
        * ((params.delta_sq / params.psi) * ((a - 1.0).max(0.0) + a * decay.value)
            + params.unlearnable() * (1.0 + a * bias.value));
    Ok(QuadratureValue {
        value,
        nodes: decay.nodes.max(bias.nodes),
        converged: decay.converged && bias.converged,
    })
}

/// Large-system SGF correction to the test risk at time `t`:
/// `(γ'/2)(α/ψ){(α/ψ)δ² F1 + U[α F2 + max(0, 1-α) ∫(1-e^{-2σt})/2 ρ]}`.
/// An infinite `t` gives [`sgf_correction_limit`].
pub fn sgf_correction_asymptotic(params: &AsymptoticParams, t: f64) -> Result<f64> {
    sgf_correction_asymptotic_checked(params, t).map(|q| q.value)
}

/// [`sgf_correction_asymptotic`] with quadrature convergence bookkeeping.
pub fn sgf_correction_asymptotic_checked(
    params: &AsymptoticParams,
    t: f64,
) -> Result<QuadratureValue> {
    params.validate()?;
    check_time(t)?;
    if t.is_infinite() {
        return Ok(QuadratureValue {
            value: sgf_correction_limit(params)?,
            nodes: 0,
            converged: true,
        });
    }
    if t == 0.0 || params.gamma_prime == 0.0 {
        return Ok(QuadratureValue {
            value: 0.0,
            nodes: 0,
            converged: true,
        });
    }
    let a = params.alpha;
    let ratio = a / params.psi;
    let k1 = f1(a, t)?;
    let k2 = f2(a, t)?;
    let mut nodes = k1.nodes.max(k2.nodes);
    let mut converged = k1.converged && k2.converged;
    let edge = if a < 1.0 {
        let q = mp_integral_adaptive(a, |s| -0.5 * (-2.0 * s * t).exp_m1())?;
        nodes = nodes.max(q.nodes);
        converged &= q.converged;
        (1.0 - a) * q.value
    } else {
        0.0
    };
    let value = 0.5
        * params.gamma_prime
        * ratio
        * (ratio * params.delta_sq * k1.value + params.unlearnable() * (a * k2.value + edge));
    Ok(QuadratureValue {
        value,
        nodes,
        converged,
    })
}

/// Infinite-time GF risk `½{(δ²/ψ)max(0, α-1) + U / (1 - min(α, 1/α))}`.
/// Diverges at the interpolation threshold `α = 1`.
pub fn gf_risk_limit(params: &AsymptoticParams) -> Result<f64> {
    params.validate()?;
    let a = params.alpha;
    if a == 1.0 {
        return Err(Error::ThresholdDivergence);
    }
    Ok(0.5
        * ((params.delta_sq / params.psi) * (a - 1.0).max(0.0)
            + params.unlearnable() / (1.0 - a.min(1.0 / a))))
}

/// Infinite-time SGF correction `(γ'/4)(α/ψ) U max(0, 1-α)`; zero at and
/// above the interpolation threshold.
pub fn sgf_correction_limit(params: &AsymptoticParams) -> Result<f64> {
    params.validate()?;
    let a = params.alpha;
    Ok(0.25 * params.gamma_prime * (a / params.psi) * params.unlearnable() * (1.0 - a).max(0.0))
}
