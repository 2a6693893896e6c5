use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ode::OdeTrajectory;
use super::system::SdeSystem;
use crate::linalg::symmetrize;
use crate::quadrature::{trapezoid_weights, uniform_grid_weights};
use crate::{Error, Result};

/// Time-ordered propagator `U(τ_to, τ_from)` of the linearised flow,
/// `∏ exp(½(F_k + F_{k+1}) Δτ)` with the latest step leftmost. Both times are
/// snapped to the nearest grid node.
pub fn propagator(traj: &OdeTrajectory, tau_from: f64, tau_to: f64) -> Result<DMatrix<f64>> {
    if tau_from > tau_to {
        return Err(Error::arg(format!(
            "propagator needs tau_from <= tau_to, got {tau_from} > {tau_to}"
        )));
    }
    let tol = 1e-9 * traj.dt();
    if tau_from < traj.t0 - tol || tau_to > traj.t_end + tol {
        return Err(Error::arg(format!(
            "propagator interval [{tau_from}, {tau_to}] leaves the trajectory [{}, {}]",
            traj.t0, traj.t_end
        )));
    }
    let (i, j) = (traj.nearest_index(tau_from), traj.nearest_index(tau_to));
    let d = traj.states[0].len();
    let exps = traj.step_exponentials();
    let mut u = DMatrix::identity(d, d);
    for e in &exps[i..j] {
        u = e * u;
    }
    Ok(u)
}

/// Quadrature rule for the covariance time integral on the trajectory grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceRule {
    /// Composite trapezoid: second order.
    Trapezoid,
    /// Composite Simpson (with a closing 3/8 panel on odd node counts): fourth
    /// order.
    #[default]
    Simpson,
}

/// Covariance of the rescaled fluctuation `z(t) = (w(t) - w_ode(t))/√γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationCovariance {
    pub t: f64,
    /// Learning-rate-free covariance of `z(t)`.
    pub cov_z: DMatrix<f64>,
    pub gamma: f64,
}

impl FluctuationCovariance {
    /// Covariance of `w(t)` itself, `γ·cov_z`.
    pub fn cov_w(&self) -> DMatrix<f64> {
        &self.cov_z * self.gamma
    }
}

/// `cov_z(t) = ∫_{t0}^{t} U(t, τ) G Gᵀ U(t, τ)ᵀ dτ` along the trajectory,
/// using the default [`CovarianceRule::Simpson`].
pub fn fluctuation_covariance<S: SdeSystem + ?Sized>(
    system: &S,
    traj: &OdeTrajectory,
    t: f64,
    gamma: f64,
) -> Result<FluctuationCovariance> {
    fluctuation_covariance_with_rule(system, traj, t, gamma, CovarianceRule::default())
}

/// [`fluctuation_covariance`] with an explicit time-quadrature rule.
pub fn fluctuation_covariance_with_rule<S: SdeSystem + ?Sized>(
    system: &S,
    traj: &OdeTrajectory,
    t: f64,
    gamma: f64,
    rule: CovarianceRule,
) -> Result<FluctuationCovariance> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::arg(format!(
            "learning rate must be finite and non-negative, got {gamma}"
        )));
    }
    let j = traj.index_of(t)?;
    let d = traj.states[0].len();
    let dt = traj.dt();
    let weights = match rule {
        CovarianceRule::Trapezoid => trapezoid_weights(j, dt),
        CovarianceRule::Simpson => uniform_grid_weights(j, dt),
    };
    let exps = traj.step_exponentials();
    let mut cov = DMatrix::zeros(d, d);
    // Walk backwards so that U(t, τ_k) = U(t, τ_{k+1}) · E_k is one product per node.
    let mut u = DMatrix::<f64>::identity(d, d);
    for k in (0..=j).rev() {
        if k < j {
            u = &u * &exps[k];
        }
        if weights[k] == 0.0 {
            continue;
        }
        let g = system.diffusion(traj.grid[k], &traj.states[k]);
        if g.nrows() != d || g.ncols() != system.dim_noise() {
            return Err(Error::Evaluation(format!(
                "diffusion returned a {}x{} matrix, expected {}x{}",
                g.nrows(),
                g.ncols(),
                d,
                system.dim_noise()
            )));
        }
        let ug = &u * g;
        cov += (&ug * ug.transpose()) * weights[k];
    }
    Ok(FluctuationCovariance {
        t,
        cov_z: symmetrize(&cov),
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, sym_eigenvalues};
    use crate::sde::{solve_ode, FnSystem};
    use nalgebra::DVector;

    fn linear_system() -> (FnSystem, DMatrix<f64>) {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.3, 0.0, -0.2, -0.5, 0.1, 0.0, 0.4, -2.0]);
        let a2 = a.clone();
        let sys = FnSystem::new(
            3,
            2,
            move |_, w| &a2 * w,
            |_, w| DMatrix::from_row_slice(3, 2, &[1.0, w[0], 0.0, 0.5, w[2], 0.0]),
        );
        (sys, a)
    }

    #[test]
    fn propagator_identity_dense_exponential_and_composition() {
        let (sys, a) = linear_system();
        let traj = solve_ode(
            &sys,
            &DVector::from_vec(vec![1.0, -1.0, 0.5]),
            0.0,
            2.0,
            200,
        )
        .unwrap();
        let id = propagator(&traj, 0.7, 0.7).unwrap();
        assert_eq!(id, DMatrix::identity(3, 3));
        let u = propagator(&traj, 0.2, 1.5).unwrap();
        let dense = expm(&(&a * 1.3));
        assert!((&u - &dense).abs().max() < 1e-8);
        let comp = propagator(&traj, 1.0, 1.5).unwrap() * propagator(&traj, 0.2, 1.0).unwrap();
        assert!((&u - comp).abs().max() < 1e-8);
        assert!(propagator(&traj, 1.5, 0.2).is_err());
    }

    #[test]
    fn covariance_is_symmetric_psd_and_zero_at_start() {
        let (sys, _) = linear_system();
        let traj = solve_ode(
            &sys,
            &DVector::from_vec(vec![1.0, -1.0, 0.5]),
            0.0,
            2.0,
            100,
        )
        .unwrap();
        let c0 = fluctuation_covariance(&sys, &traj, 0.0, 0.1).unwrap();
        assert_eq!(c0.cov_z, DMatrix::zeros(3, 3));
        for t in [0.02, 0.5, 1.0, 2.0] {
            let c = fluctuation_covariance(&sys, &traj, t, 0.1).unwrap();
            assert_eq!(c.cov_z, c.cov_z.transpose());
            let ev = sym_eigenvalues(&c.cov_z);
            assert!(ev[0] >= -1e-10 * ev[2]);
            assert!((c.cov_w() - &c.cov_z * 0.1).abs().max() == 0.0);
        }
        assert!(fluctuation_covariance(&sys, &traj, 0.013, 0.1).is_err());
    }

    #[test]
    fn rules_agree_on_refined_grid() {
        let (sys, _) = linear_system();
        let traj = solve_ode(
            &sys,
            &DVector::from_vec(vec![1.0, -1.0, 0.5]),
            0.0,
            1.0,
            400,
        )
        .unwrap();
        let s = fluctuation_covariance_with_rule(&sys, &traj, 1.0, 1.0, CovarianceRule::Simpson)
            .unwrap();
        let t = fluctuation_covariance_with_rule(&sys, &traj, 1.0, 1.0, CovarianceRule::Trapezoid)
            .unwrap();
        assert!((s.cov_z - t.cov_z).abs().max() < 1e-4);
    }
}
