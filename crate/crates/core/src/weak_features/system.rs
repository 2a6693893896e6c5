use nalgebra::{DMatrix, DVector};

use super::instance::WeakFeaturesInstance;
use crate::sde::SdeSystem;

/// The SGF SDE of the weak-features model on the learned coordinates:
/// drift `X_Aᵀ(y - X_A β̂_A)/n`, noise factor `G = (‖y - X_A β̂_A‖/n) X_Aᵀ`
/// so that `GGᵀ` is the approximate noise covariance.
#[derive(Debug, Clone)]
pub struct WeakFeaturesSgf {
    x_a: DMatrix<f64>,
    x_at: DMatrix<f64>,
    y: DVector<f64>,
    hessian: DMatrix<f64>,
}

impl WeakFeaturesSgf {
    pub fn new(inst: &WeakFeaturesInstance) -> Self {
        let x_at = inst.x_a.transpose();
        let hessian = &x_at * &inst.x_a / inst.n as f64;
        WeakFeaturesSgf {
            x_a: inst.x_a.clone(),
            x_at,
            y: inst.y.clone(),
            hessian,
        }
    }

    fn n(&self) -> f64 {
        self.x_a.nrows() as f64
    }
}

impl SdeSystem for WeakFeaturesSgf {
    fn dim_state(&self) -> usize {
        self.x_a.ncols()
    }
    fn dim_noise(&self) -> usize {
        self.x_a.nrows()
    }
    fn drift(&self, _tau: f64, w: &DVector<f64>) -> DVector<f64> {
        &self.x_at * (&self.y - &self.x_a * w) / self.n()
    }
    fn diffusion(&self, _tau: f64, w: &DVector<f64>) -> DMatrix<f64> {
        let r = (&self.y - &self.x_a * w).norm();
        &self.x_at * (r / self.n())
    }
    fn jacobian(&self, _tau: f64, _w: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(-&self.hessian)
    }
    fn is_gradient_flow(&self) -> bool {
        true
    }
}
