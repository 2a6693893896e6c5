//! The weak-features regression model: labels `y = Xβ + με` with
//! `X ∈ R^{n×d}` standard normal, a learner that only sees a random subset
//! `A` of `p` features, its closed-form gradient-flow trajectory, the SGD
//! noise covariance, finite-size expected risks, and discrete SGD/GD
//! simulation.

mod curve;
mod finite;
mod instance;
mod params;
mod risk;
mod sim;
mod spectrum;
mod system;

pub use curve::{asymptotic_risk_curve, finite_risk_curve, Provenance, RiskCurve, RiskRecord};
pub use finite::{
    expected_gf_risk_finite, expected_sgf_correction_finite, expected_train_error_finite,
    FiniteOptions, FiniteSizeEstimator, MonteCarloEstimate, DEFAULT_QUAD_PANELS,
    DEFAULT_REPLICATES,
};
pub use instance::{generate_instance, gf_estimator, WeakFeaturesInstance};
pub use params::{ModelParams, VectorPolicy};
pub use risk::{
    diffusion_matrix, exact_noise_covariance, instance_covariance_trace, risk_given_estimator,
};
pub use sim::{
    fix_vectors, gd_risk_expectation, gd_spectral, sgd_minus_gd_expectation, sgd_run, sgd_run_at,
    DiffCurve, Mode, RiskTrajectory, SimOptions,
};
pub use spectrum::{sample_spectrum, SpectrumSampler};
pub use system::WeakFeaturesSgf;
