use nalgebra::{DMatrix, DVector};

use super::instance::WeakFeaturesInstance;
use crate::quadrature::composite_gauss_legendre;
use crate::{Error, Result};

/// Population test risk `½(‖β_A - β̂_A‖² + ‖β_{A^c}‖² + μ²)` of an estimator
/// supported on `A`.
pub fn risk_given_estimator(
    beta: &DVector<f64>,
    subset: &[usize],
    beta_hat_a: &DVector<f64>,
    mu: f64,
) -> f64 {
    let mut in_subset = vec![false; beta.len()];
    for &i in subset {
        in_subset[i] = true;
    }
    let on: f64 = subset
        .iter()
        .zip(beta_hat_a.iter())
        .map(|(&i, b)| (beta[i] - b).powi(2))
        .sum();
    let off: f64 = beta
        .iter()
        .zip(&in_subset)
        .filter(|(_, &inside)| !inside)
        .map(|(b, _)| b * b)
        .sum();
    0.5 * (on + off + mu * mu)
}

/// Approximate SGD noise covariance `Σ = (1/n²)‖y - X_A β̂_A‖² X_AᵀX_A`.
pub fn diffusion_matrix(inst: &WeakFeaturesInstance, beta_a: &DVector<f64>) -> DMatrix<f64> {
    let r2 = inst.residual(beta_a).norm_squared();
    let n2 = (inst.n * inst.n) as f64;
    inst.x_a.transpose() * &inst.x_a * (r2 / n2)
}

/// Exact single-sample gradient-noise covariance
/// `X_Aᵀ[(1/n)diag(r_k²) - (1/n²) r rᵀ]X_A` with `r = y - X_A β̂_A`.
pub fn exact_noise_covariance(inst: &WeakFeaturesInstance, beta_a: &DVector<f64>) -> DMatrix<f64> {
    let r = inst.residual(beta_a);
    let n = inst.n as f64;
    let mut mid = DMatrix::from_diagonal(&r.map(|v| v * v / n));
    mid -= &r * r.transpose() / (n * n);
    inst.x_a.transpose() * mid * &inst.x_a
}

/// `Tr C_z(t) = (1/n²)∫₀ᵗ ‖y - X_A β̂^GF_A(τ)‖² Tr{Λ² e^{-2Λ²(t-τ)/n}} dτ` by
/// composite Gauss–Legendre with `quad_panels` panels.
pub fn instance_covariance_trace(
    inst: &WeakFeaturesInstance,
    beta0_a: &DVector<f64>,
    t: f64,
    quad_panels: usize,
) -> Result<f64> {
    if t.is_nan() || t < 0.0 || t.is_infinite() {
        return Err(Error::arg(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let n = inst.n as f64;
    let lam2: Vec<f64> = inst.s.iter().map(|l| l * l).collect();
    let mut failure = None;
    let value = composite_gauss_legendre(0.0, t, quad_panels, |tau| {
        let b = match inst.gf_estimator(beta0_a, tau) {
            Ok(b) => b,
            Err(e) => {
                failure.get_or_insert(e);
                return 0.0;
            }
        };
        let r2 = inst.residual(&b).norm_squared();
        let tr: f64 = lam2
            .iter()
            .map(|l| l * (-2.0 * l * (t - tau) / n).exp())
            .sum();
        r2 * tr
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(value / (n * n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weak_features::{generate_instance, ModelParams};

    #[test]
    fn risk_reference_values() {
        let beta = DVector::from_vec(vec![0.6, 0.8]);
        let all = [0usize, 1];
        assert_eq!(risk_given_estimator(&beta, &all, &beta, 0.0), 0.0);
        assert!((risk_given_estimator(&beta, &all, &DVector::zeros(2), 0.0) - 0.5).abs() < 1e-15);
        assert!((risk_given_estimator(&beta, &all, &beta, 0.5) - 0.125).abs() < 1e-15);
        // β̂_A = 0 on a strict subset still sees all of ‖β‖²
        assert!((risk_given_estimator(&beta, &[1], &DVector::zeros(1), 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diffusion_structure() {
        let inst = generate_instance(&ModelParams::new(5, 6, 3, 0.4, 0.01).unwrap(), 4).unwrap();
        let b = inst.beta0_a();
        let sigma = diffusion_matrix(&inst, &b);
        let gram = inst.x_a.transpose() * &inst.x_a;
        let cos = sigma.dot(&gram) / (sigma.norm() * gram.norm());
        assert!((1.0 - cos).abs() < 1e-10);
        assert!(crate::linalg::sym_eigenvalues(&sigma)[0] >= -1e-12);
    }

    #[test]
    fn zero_loss_gives_zero_diffusion() {
        // p = n: some β̂ interpolates exactly
        let inst = generate_instance(&ModelParams::new(3, 5, 3, 0.4, 0.01).unwrap(), 2).unwrap();
        let b = inst.x_a.clone().try_inverse().unwrap() * &inst.y;
        assert!(diffusion_matrix(&inst, &b).norm() < 1e-20);
    }

    #[test]
    fn exact_covariance_matches_enumeration() {
        let inst = generate_instance(&ModelParams::new(4, 5, 3, 0.4, 0.01).unwrap(), 6).unwrap();
        let b = inst.beta0_a();
        let n = inst.n as f64;
        let r = inst.residual(&b);
        let grad_full = -(inst.x_a.transpose() * &r) / n;
        let mut brute = DMatrix::zeros(3, 3);
        for k in 0..inst.n {
            let xk = inst.x_a.row(k).transpose();
            let gk = -&xk * r[k];
            let xi = gk - &grad_full;
            brute += &xi * xi.transpose() / n;
        }
        let exact = exact_noise_covariance(&inst, &b);
        assert!((&brute - &exact).abs().max() < 1e-12);
    }

    #[test]
    fn trace_vanishes_on_zero_residual_path() {
        // μ = 0 and p = d ≥ n: y lies in the column span and the min-norm
        // solution interpolates, so the residual is zero for all τ.
        let inst = generate_instance(&ModelParams::new(3, 5, 5, 0.0, 0.01).unwrap(), 1).unwrap();
        let start = inst.x_a.clone().pseudo_inverse(1e-12).unwrap() * &inst.y;
        assert_eq!(
            instance_covariance_trace(&inst, &start, 0.0, 64).unwrap(),
            0.0
        );
        for t in [0.5, 2.0] {
            assert!(instance_covariance_trace(&inst, &start, t, 64).unwrap() < 1e-24);
        }
    }
}
