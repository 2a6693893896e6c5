//! Time evolution of test risk under gradient flow (GF) and stochastic
//! gradient flow (SGF).
//!
//! The crate is organised in five layers:
//!
//! * [`sde`]: a general small-learning-rate fluctuation engine for Itô SDEs
//!   (deterministic flow, propagators, fluctuation covariance, Gaussian
//!   transition density, Euler–Maruyama sampling) plus an exactly solvable
//!   one-dimensional linear SDE used as an oracle.
//! * [`weak_features`]: the weak-features linear regression model with its
//!   closed-form GF trajectory, finite-size expected risks and discrete
//!   SGD/GD simulation.
//! * [`mp`]: Marchenko–Pastur quadrature and the large-system closed forms.
//! * [`experiments`]: reproducible sweeps that emit tabular results.
//! * [`cli`]: the command-line front end used by the `sgflow` binary.

// `!(x > 0.0)` is used on purpose so NaN fails validation too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mp;
pub mod parallel;
pub mod quadrature;
pub mod sde;
pub mod weak_features;

pub use error::{Error, Result};
