//! Small-learning-rate fluctuation engine for Itô SDEs
//! `dw = f(τ, w) dτ + √γ G(τ, w) dη`.
//!
//! The deterministic flow `dw/dτ = f` is integrated on a uniform grid, the
//! drift Jacobian `F_f` is cached along it, and the Gaussian fluctuations
//! `z = (w - w_ode)/√γ` have covariance
//! `∫ U(t, τ) G Gᵀ U(t, τ)ᵀ dτ`, where `U` is the time-ordered exponential
//! of `+F_f` (latest step leftmost).

mod covariance;
mod density;
mod linear;
mod ode;
mod paths;
mod system;

pub use covariance::{
    fluctuation_covariance, fluctuation_covariance_with_rule, propagator, CovarianceRule,
    FluctuationCovariance,
};
pub use density::{transition_density, transition_density_with_tol, DEFAULT_EIGEN_TOL};
pub use linear::{linear_sde_exact, linear_sde_exact_with_tol, LinearSde1d, ScalarFn};
pub use ode::{jacobian_fd, solve_ode, OdeTrajectory, DEFAULT_FD_STEP};
pub use paths::{
    empirical_fluctuation_stats, sample_paths, FluctuationStats, PathEnsemble, RecordPlan,
    SampleOptions,
};
pub use system::{improved_drift, FnSystem, SdeSystem};
