use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the ground truth `β` and the initialisation `β̂⁰` are chosen.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VectorPolicy {
    /// `β` uniform on the sphere of radius `norm_beta`, `β̂⁰` uniform on the
    /// unit sphere, independently.
    #[default]
    UnitSphere,
    /// User-supplied vectors of length `d`.
    Given { beta: Vec<f64>, beta0: Vec<f64> },
}

/// Sizes and constants of the weak-features model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Number of samples.
    pub n: usize,
    /// Ambient dimension.
    pub d: usize,
    /// Number of learned features, `1 ≤ p ≤ d`.
    pub p: usize,
    /// Label noise strength.
    pub mu: f64,
    /// Learning rate.
    pub gamma: f64,
    /// `‖β‖`.
    #[serde(default = "default_norm_beta")]
    pub norm_beta: f64,
    /// `‖β - β̂⁰‖²` entering the expected-risk formulas. Two independent unit
    /// vectors give 2 on average; [`ModelParams::with_vectors`] sets the
    /// exact value.
    #[serde(default = "default_delta_sq")]
    pub delta_sq: f64,
    #[serde(default)]
    pub vectors: VectorPolicy,
    /// Mini-batch size for SGD (gradients are averaged over the batch).
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_norm_beta() -> f64 {
    1.0
}
fn default_delta_sq() -> f64 {
    2.0
}
fn default_batch() -> usize {
    1
}

impl ModelParams {
    /// Parameters with unit-sphere vectors and the defaults `‖β‖ = 1`,
    /// `‖β - β̂⁰‖² = 2`, batch size 1.
    pub fn new(n: usize, d: usize, p: usize, mu: f64, gamma: f64) -> Result<Self> {
        let params = ModelParams {
            n,
            d,
            p,
            mu,
            gamma,
            norm_beta: 1.0,
            delta_sq: 2.0,
            vectors: VectorPolicy::UnitSphere,
            batch_size: 1,
        };
        params.validate()?;
        Ok(params)
    }

    /// Fixes `β` and `β̂⁰`, updating `norm_beta` and `delta_sq` to match.
    pub fn with_vectors(mut self, beta: Vec<f64>, beta0: Vec<f64>) -> Result<Self> {
        if beta.len() != self.d || beta0.len() != self.d {
            return Err(Error::arg(format!(
                "beta and beta0 must have length d = {}, got {} and {}",
                self.d,
                beta.len(),
                beta0.len()
            )));
        }
        self.norm_beta = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        self.delta_sq = beta.iter().zip(&beta0).map(|(a, b)| (a - b).powi(2)).sum();
        self.vectors = VectorPolicy::Given { beta, beta0 };
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::arg("n must be at least 1"));
        }
        if self.p == 0 || self.p > self.d {
            return Err(Error::arg(format!(
                "need 1 <= p <= d, got p = {} and d = {}",
                self.p, self.d
            )));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::arg(format!(
                "mu must be finite and non-negative, got {}",
                self.mu
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::arg(format!(
                "gamma must be finite and non-negative, got {}",
                self.gamma
            )));
        }
        if !(self.norm_beta >= 0.0 && self.norm_beta.is_finite()) {
            return Err(Error::arg("norm_beta must be finite and non-negative"));
        }
        if !(self.delta_sq >= 0.0 && self.delta_sq.is_finite()) {
            return Err(Error::arg("delta_sq must be finite and non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::arg("batch_size must be at least 1"));
        }
        if let VectorPolicy::Given { beta, beta0 } = &self.vectors {
            if beta.len() != self.d || beta0.len() != self.d {
                return Err(Error::arg("given beta and beta0 must have length d"));
            }
        }
        Ok(())
    }

    /// `α = p/n`.
    pub fn alpha(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    /// `ψ = d/n`.
    pub fn psi(&self) -> f64 {
        self.d as f64 / self.n as f64
    }

    /// `(1 - p/d)‖β‖² + μ²`: subset-averaged unlearnable signal plus noise.
    pub fn unlearnable(&self) -> f64 {
        (1.0 - self.p as f64 / self.d as f64) * self.norm_beta * self.norm_beta + self.mu * self.mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ModelParams::new(10, 5, 6, 0.1, 0.1).is_err());
        assert!(ModelParams::new(0, 5, 3, 0.1, 0.1).is_err());
        assert!(ModelParams::new(10, 5, 3, -0.1, 0.1).is_err());
        let p = ModelParams::new(10, 5, 3, 0.5, 0.1).unwrap();
        assert!((p.alpha() - 0.3).abs() < 1e-15);
        assert!((p.unlearnable() - (0.4 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn given_vectors_set_norms() {
        let p = ModelParams::new(4, 2, 1, 0.0, 0.1)
            .unwrap()
            .with_vectors(vec![3.0, 4.0], vec![0.0, 4.0])
            .unwrap();
        assert_eq!(p.norm_beta, 5.0);
        assert_eq!(p.delta_sq, 9.0);
        assert!(ModelParams::new(4, 2, 1, 0.0, 0.1)
            .unwrap()
            .with_vectors(vec![1.0], vec![1.0, 2.0])
            .is_err());
    }

    #[test]
    fn serde_round_trip() {
        let p = ModelParams::new(4, 2, 1, 0.0, 0.1)
            .unwrap()
            .with_vectors(vec![3.0, 4.0], vec![0.0, 4.0])
            .unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<ModelParams>(&s).unwrap(), p);
    }
}
