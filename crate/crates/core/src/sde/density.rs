use std::f64::consts::PI;

use nalgebra::{DVector, SymmetricEigen};

use super::covariance::FluctuationCovariance;
use super::ode::OdeTrajectory;
use crate::{Error, Result};

/// Relative eigenvalue cutoff defining the support of the Gaussian law.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;

/// Gaussian transition density at `w` with mean `w_ode(t)` and covariance
/// `cov.cov_w()`, evaluated on the support subspace.
pub fn transition_density(
    w: &DVector<f64>,
    t: f64,
    traj: &OdeTrajectory,
    cov: &FluctuationCovariance,
) -> Result<f64> {
    transition_density_with_tol(w, t, traj, cov, DEFAULT_EIGEN_TOL)
}

/// [`transition_density`] with an explicit relative eigenvalue cutoff.
///
/// Eigenvalues below `tol·λ_max` are dropped; the density uses the
/// pseudo-inverse and pseudo-determinant over the retained directions and is
/// zero when `w - w_ode(t)` has a component off the support.
pub fn transition_density_with_tol(
    w: &DVector<f64>,
    t: f64,
    traj: &OdeTrajectory,
    cov: &FluctuationCovariance,
    tol: f64,
) -> Result<f64> {
    if (cov.t - t).abs() > 1e-12 * t.abs().max(1.0) {
        return Err(Error::arg(format!(
            "covariance is at t = {}, density requested at t = {t}",
            cov.t
        )));
    }
    if !(cov.gamma > 0.0) {
        return Err(Error::arg(
            "transition density needs a positive learning rate",
        ));
    }
    let mean = traj.state_at(t)?;
    if w.len() != mean.len() {
        return Err(Error::arg(format!(
            "point has length {}, state dimension is {}",
            w.len(),
            mean.len()
        )));
    }
    let diff = w - mean;
    let eig = SymmetricEigen::new(cov.cov_w());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = tol * lmax;
    let scale = diff.norm();
    if lmax <= 0.0 {
        return if scale == 0.0 {
            Ok(f64::INFINITY)
        } else {
            Err(Error::DegenerateDensity(format!(
                "covariance at t = {t} vanishes but the point is {scale} away from the mean"
            )))
        };
    }
    let mut quad = 0.0;
    let mut log_det = 0.0;
    let mut rank = 0usize;
    let mut on_support = DVector::zeros(diff.len());
    for (i, lam) in eig.eigenvalues.iter().enumerate() {
        if *lam > cutoff {
            let v = eig.eigenvectors.column(i);
            let c = v.dot(&diff);
            on_support += v * c;
            quad += c * c / lam;
            log_det += lam.ln();
            rank += 1;
        }
    }
    let off = (&diff - on_support).norm();
    if off > 1e-8 * scale.max(lmax.sqrt()) {
        return Ok(0.0);
    }
    let log_norm = -0.5 * (rank as f64 * (2.0 * PI).ln() + log_det);
    Ok((log_norm - 0.5 * quad).exp())
}
