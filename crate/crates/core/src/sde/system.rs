use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::ode::{jacobian_fd, DEFAULT_FD_STEP};

/// An Itô SDE `dw = f(τ, w) dτ + √γ G(τ, w) dη` with state dimension `d`
/// and noise dimension `n`.
///
/// Implementations must be pure: equal inputs give equal outputs.
pub trait SdeSystem: Sync {
    /// State dimension `d`.
    fn dim_state(&self) -> usize;
    /// Noise dimension `n`.
    fn dim_noise(&self) -> usize;
    /// Drift `f(τ, w) ∈ R^d`.
    fn drift(&self, tau: f64, w: &DVector<f64>) -> DVector<f64>;
    /// Diffusion `G(τ, w) ∈ R^{d×n}`.
    fn diffusion(&self, tau: f64, w: &DVector<f64>) -> DMatrix<f64>;
    /// Analytic drift Jacobian `∂f/∂w`, when available.
    fn jacobian(&self, _tau: f64, _w: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
    /// True when the drift is minus the gradient of a potential `Φ(τ, ·)`.
    /// Enables the improved drift of [`improved_drift`].
    fn is_gradient_flow(&self) -> bool {
        false
    }
}

/// `-∇(Φ + (γ/4)‖∇Φ‖²) = f - (γ/2) F_f f` for a gradient drift `f = -∇Φ`,
/// whose Jacobian is `F_f = -∇²Φ`.
pub fn improved_drift<S: SdeSystem + ?Sized>(
    system: &S,
    tau: f64,
    w: &DVector<f64>,
    gamma: f64,
) -> DVector<f64> {
    let f = system.drift(tau, w);
    let jac = system
        .jacobian(tau, w)
        .unwrap_or_else(|| jacobian_fd(system, tau, w, DEFAULT_FD_STEP));
    let correction = &jac * &f;
    f - correction * (0.5 * gamma)
}

type DriftFn = dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync;
type DiffusionFn = dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync;
type JacobianFn = dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// An [`SdeSystem`] assembled from closures.
#[derive(Clone)]
pub struct FnSystem {
    dim_state: usize,
    dim_noise: usize,
    drift: Arc<DriftFn>,
    diffusion: Arc<DiffusionFn>,
    jacobian: Option<Arc<JacobianFn>>,
    gradient_flow: bool,
}

impl std::fmt::Debug for FnSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnSystem")
            .field("dim_state", &self.dim_state)
            .field("dim_noise", &self.dim_noise)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("gradient_flow", &self.gradient_flow)
            .finish()
    }
}

impl FnSystem {
    pub fn new(
        dim_state: usize,
        dim_noise: usize,
        drift: impl Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        diffusion: impl Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        FnSystem {
            dim_state,
            dim_noise,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            jacobian: None,
            gradient_flow: false,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    /// Declares the drift to be a negative potential gradient.
    pub fn gradient_flow(mut self, yes: bool) -> Self {
        self.gradient_flow = yes;
        self
    }
}

impl SdeSystem for FnSystem {
    fn dim_state(&self) -> usize {
        self.dim_state
    }
    fn dim_noise(&self) -> usize {
        self.dim_noise
    }
    fn drift(&self, tau: f64, w: &DVector<f64>) -> DVector<f64> {
        (self.drift)(tau, w)
    }
    fn diffusion(&self, tau: f64, w: &DVector<f64>) -> DMatrix<f64> {
        (self.diffusion)(tau, w)
    }
    fn jacobian(&self, tau: f64, w: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.jacobian.as_ref().map(|j| j(tau, w))
    }
    fn is_gradient_flow(&self) -> bool {
        self.gradient_flow
    }
}
