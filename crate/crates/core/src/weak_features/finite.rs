use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::spectrum::{sample_spectrum, SpectrumSampler};
use crate::parallel::{mean_and_stderr, task_rng, try_map_indexed};
use crate::quadrature::composite_gauss_legendre_points;
use crate::{Error, Result};

/// Default Monte Carlo replicate count for spectral expectations.
pub const DEFAULT_REPLICATES: usize = 100;
/// Default number of Gauss–Legendre panels for the time integrals.
pub const DEFAULT_QUAD_PANELS: usize = 64;

/// Knobs for the finite-size expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteOptions {
    pub sampler: SpectrumSampler,
    pub quad_panels: usize,
    /// Worker threads (0 = all cores).
    pub threads: usize,
}

impl Default for FiniteOptions {
    fn default() -> Self {
        FiniteOptions {
            sampler: SpectrumSampler::default(),
            quad_panels: DEFAULT_QUAD_PANELS,
            threads: 0,
        }
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub stderr: f64,
    pub replicates: usize,
}

/// Finite-size expectations over `R` sampled spectra of `X_AᵀX_A / n`. The
/// spectra are drawn once and reused for every time point.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSizeEstimator {
    pub params: ModelParams,
    pub options: FiniteOptions,
    pub seed: u64,
    /// Per-replicate eigenvalues `σ_i = λ_i²/n`.
    pub spectra: Vec<Vec<f64>>,
}

impl FiniteSizeEstimator {
    /// Samples `replicates` spectra; replicate `k` uses stream `k` of `seed`.
    pub fn sample(
        params: &ModelParams,
        replicates: usize,
        seed: u64,
        options: FiniteOptions,
    ) -> Result<Self> {
        params.validate()?;
        if replicates < 2 {
            return Err(Error::InsufficientReplicates {
                needed: 2,
                got: replicates,
            });
        }
        if options.quad_panels == 0 {
            return Err(Error::arg("quad_panels must be positive"));
        }
        let spectra = try_map_indexed(options.threads, replicates, |k| {
            let mut rng = task_rng(seed, k as u64);
            sample_spectrum(params.n, params.p, options.sampler, &mut rng)
        })?;
        Ok(FiniteSizeEstimator {
            params: params.clone(),
            options,
            seed,
            spectra,
        })
    }

    /// Smallest sampled eigenvalue `λ²/n`; tiny values flag the
    /// interpolation threshold.
    pub fn min_eigenvalue(&self) -> f64 {
        self.spectra
            .iter()
            .flat_map(|s| s.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    fn reduce(&self, per_replicate: impl Fn(&[f64]) -> f64 + Sync) -> Result<MonteCarloEstimate> {
        let values = try_map_indexed(self.options.threads, self.spectra.len(), |k| {
            let v = per_replicate(&self.spectra[k]);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Divergence(format!(
                    "replicate {k} produced a non-finite value"
                )))
            }
        })?;
        let (value, stderr) = mean_and_stderr(&values);
        Ok(MonteCarloEstimate {
            value,
            stderr,
            replicates: values.len(),
        })
    }

    /// Expected GF test risk
    /// `½{δ²[max(0, p-n) + E Tr e^{-2Λ²t/n}]/d + U[1 + E Tr Λ⁻²(I - e^{-Λ²t/n})²]}`
    /// with `U = (1 - p/d)‖β‖² + μ²`.
    pub fn gf_risk(&self, t: f64) -> Result<MonteCarloEstimate> {
        check_time(t)?;
        let p = &self.params;
        let (nf, df) = (p.n as f64, p.d as f64);
        let excess = p.p.saturating_sub(p.n) as f64;
        let u = p.unlearnable();
        self.reduce(|sig| {
            let mut decay = 0.0;
            let mut bias = 0.0;
            for &s in sig {
                decay += (-2.0 * s * t).exp();
                if s > 0.0 {
                    let g = -(-s * t).exp_m1();
                    bias += g * g / (nf * s);
                }
            }
            0.5 * (p.delta_sq * (excess + decay) / df + u * (1.0 + bias))
        })
    }

    /// Expected train error
    /// `½{(δ²/d)(1/n)E Tr Λ²e^{-2Λ²t/n} + U[(1/n)E Tr e^{-2Λ²t/n} + max(0, 1-p/n)]}`.
    pub fn train_error(&self, t: f64) -> Result<MonteCarloEstimate> {
        check_time(t)?;
        let p = &self.params;
        let (nf, df) = (p.n as f64, p.d as f64);
        let floor = (1.0 - p.p as f64 / nf).max(0.0);
        let u = p.unlearnable();
        self.reduce(|sig| {
            let mut weighted = 0.0;
            let mut decay = 0.0;
            for &s in sig {
                let e = (-2.0 * s * t).exp();
                weighted += s * e;
                decay += e;
            }
            0.5 * (p.delta_sq / df * weighted + u * (decay / nf + floor))
        })
    }

    /// Expected SGF correction `(γ/2) E Tr C_z(t)`:
    /// `(γ/2){(δ²/d)∫ T₁(τ)T₁(t-τ)dτ + U[(1/n)∫ T₀(τ)T₁(t-τ)dτ + ½max(0, 1-p/n) Tr(I - e^{-2Λ²t/n})]}`
    /// with `T₀(s) = Tr e^{-2Λ²s/n}` and `T₁(s) = Tr (Λ²/n)e^{-2Λ²s/n}`.
    pub fn sgf_correction(&self, t: f64) -> Result<MonteCarloEstimate> {
        check_time(t)?;
        let p = &self.params;
        if t == 0.0 || p.gamma == 0.0 {
            return Ok(MonteCarloEstimate {
                value: 0.0,
                stderr: 0.0,
                replicates: self.spectra.len(),
            });
        }
        let (nf, df) = (p.n as f64, p.d as f64);
        let floor = (1.0 - p.p as f64 / nf).max(0.0);
        let u = p.unlearnable();
        let nodes = if t.is_finite() {
            Some(composite_gauss_legendre_points(
                0.0,
                t,
                self.options.quad_panels,
            ))
        } else {
            None
        };
        self.reduce(|sig| {
            let (i11, i01) = match &nodes {
                Some((pts, wts)) => trace_products(sig, t, pts, wts),
                // Both time integrals decay to zero as t → ∞.
                None => (0.0, 0.0),
            };
            let edge: f64 = sig.iter().map(|&s| -(-2.0 * s * t).exp_m1()).sum();
            0.5 * p.gamma * (p.delta_sq / df * i11 + u * (i01 / nf + 0.5 * floor * edge))
        })
    }
}

/// `(∫ T₁(τ)T₁(t-τ)dτ, ∫ T₀(τ)T₁(t-τ)dτ)` on the given quadrature nodes.
pub(crate) fn trace_products(sig: &[f64], t: f64, pts: &[f64], wts: &[f64]) -> (f64, f64) {
    let mut i11 = 0.0;
    let mut i01 = 0.0;
    for (&tau, &w) in pts.iter().zip(wts) {
        let (mut t0_a, mut t1_a, mut t1_b) = (0.0, 0.0, 0.0);
        for &s in sig {
            let ea = (-2.0 * s * tau).exp();
            let eb = (-2.0 * s * (t - tau)).exp();
            t0_a += ea;
            t1_a += s * ea;
            t1_b += s * eb;
        }
        i11 += w * t1_a * t1_b;
        i01 += w * t0_a * t1_b;
    }
    (i11, i01)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::arg(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// Expected GF test risk over `R` sampled spectra.
pub fn expected_gf_risk_finite(
    params: &ModelParams,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    FiniteSizeEstimator::sample(params, replicates, seed, FiniteOptions::default())?.gf_risk(t)
}

/// Expected SGF correction over `R` sampled spectra with `quad_panels`
/// Gauss–Legendre panels for the time integrals.
pub fn expected_sgf_correction_finite(
    params: &ModelParams,
    t: f64,
    replicates: usize,
    quad_panels: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    let opts = FiniteOptions {
        quad_panels,
        ..Default::default()
    };
    FiniteSizeEstimator::sample(params, replicates, seed, opts)?.sgf_correction(t)
}

/// Expected train error over `R` sampled spectra.
pub fn expected_train_error_finite(
    params: &ModelParams,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    FiniteSizeEstimator::sample(params, replicates, seed, FiniteOptions::default())?.train_error(t)
}
