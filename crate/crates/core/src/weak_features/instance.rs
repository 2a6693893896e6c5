use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::params::{ModelParams, VectorPolicy};
use crate::{Error, Result};

/// One sampled data set with its feature subset, ground truth and
/// initialisation, plus the thin SVD `X_A = U_r Λ_r V_rᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakFeaturesInstance {
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub mu: f64,
    /// `n × d` features.
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub eps: DVector<f64>,
    /// Sorted learned-feature indices.
    pub subset: Vec<usize>,
    pub beta: DVector<f64>,
    pub beta0: DVector<f64>,
    /// `n × p` learned columns `X_A`.
    pub x_a: DMatrix<f64>,
    /// `n × r` left singular vectors.
    pub u_r: DMatrix<f64>,
    /// The `r = min(n, p)` singular values, non-increasing.
    pub s: DVector<f64>,
    /// `p × r` right singular vectors.
    pub v_r: DMatrix<f64>,
}

/// A uniform draw from the sphere of the given radius in `R^d`.
pub(crate) fn sphere(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(d, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 0.0 {
            return v * (radius / norm);
        }
    }
}

/// Draws an instance: `β` and `β̂⁰` per the vector policy, then `X` and `ε`
/// standard normal, then `A` uniform among `p`-subsets.
pub fn generate_instance(params: &ModelParams, seed: u64) -> Result<WeakFeaturesInstance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (beta, beta0) = match &params.vectors {
        VectorPolicy::UnitSphere => {
            let b = sphere(&mut rng, params.d, params.norm_beta);
            let b0 = sphere(&mut rng, params.d, 1.0);
            (b, b0)
        }
        VectorPolicy::Given { beta, beta0 } => (
            DVector::from_column_slice(beta),
            DVector::from_column_slice(beta0),
        ),
    };
    let x = DMatrix::<f64>::from_fn(params.n, params.d, |_, _| StandardNormal.sample(&mut rng));
    let eps = DVector::<f64>::from_fn(params.n, |_, _| StandardNormal.sample(&mut rng));
    let mut subset = rand::seq::index::sample(&mut rng, params.d, params.p).into_vec();
    subset.sort_unstable();
    WeakFeaturesInstance::from_parts(x, beta, beta0, eps, subset, params.mu)
}

impl WeakFeaturesInstance {
    /// Builds an instance from explicit data; `y = Xβ + με`.
    pub fn from_parts(
        x: DMatrix<f64>,
        beta: DVector<f64>,
        beta0: DVector<f64>,
        eps: DVector<f64>,
        subset: Vec<usize>,
        mu: f64,
    ) -> Result<Self> {
        let (n, d) = x.shape();
        if beta.len() != d || beta0.len() != d || eps.len() != n {
            return Err(Error::arg("inconsistent instance dimensions"));
        }
        let mut sorted = subset.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != subset.len() || sorted.is_empty() || *sorted.last().unwrap() >= d {
            return Err(Error::arg("subset must hold distinct indices in [0, d)"));
        }
        let p = sorted.len();
        let y = &x * &beta + &eps * mu;
        let x_a = x.select_columns(sorted.iter());
        let svd = x_a.clone().svd(true, true);
        let u = svd
            .u
            .ok_or_else(|| Error::Evaluation("SVD did not return U".into()))?;
        let vt = svd
            .v_t
            .ok_or_else(|| Error::Evaluation("SVD did not return V".into()))?;
        let r = n.min(p);
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
        order.truncate(r);
        let s = DVector::from_iterator(r, order.iter().map(|&i| svd.singular_values[i].max(0.0)));
        let u_r = u.select_columns(order.iter());
        let v_r = vt.select_rows(order.iter()).transpose();
        Ok(WeakFeaturesInstance {
            n,
            d,
            p,
            mu,
            x,
            y,
            eps,
            subset: sorted,
            beta,
            beta0,
            x_a,
            u_r,
            s,
            v_r,
        })
    }

    /// `β_A`.
    pub fn beta_a(&self) -> DVector<f64> {
        self.beta.select_rows(self.subset.iter())
    }

    /// `β̂⁰_A`.
    pub fn beta0_a(&self) -> DVector<f64> {
        self.beta0.select_rows(self.subset.iter())
    }

    /// `‖β - β̂⁰‖²` over all `d` coordinates.
    pub fn delta_sq(&self) -> f64 {
        (&self.beta - &self.beta0).norm_squared()
    }

    /// `y - X_A β̂_A`.
    pub fn residual(&self, beta_a: &DVector<f64>) -> DVector<f64> {
        &self.y - &self.x_a * beta_a
    }

    /// Training loss `‖y - X_A β̂_A‖² / (2n)`.
    pub fn train_loss(&self, beta_a: &DVector<f64>) -> f64 {
        self.residual(beta_a).norm_squared() / (2.0 * self.n as f64)
    }

    /// Eigenvalues `λ_i²/n` of `X_Aᵀ X_A / n` on the row space.
    pub fn spectrum(&self) -> Vec<f64> {
        self.s.iter().map(|l| l * l / self.n as f64).collect()
    }

    /// Closed-form GF estimator at time `t` (see [`gf_estimator`]).
    pub fn gf_estimator(&self, beta0_a: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        gf_estimator(self, beta0_a, t)
    }
}

/// Gradient-flow estimator
/// `β̂_A(t) = e^{-X_AᵀX_A t/n} β̂⁰_A + X_A^† (I - e^{-X_A X_Aᵀ t/n}) y`,
/// evaluated in the SVD basis. Components of `β̂⁰_A` outside the row space of
/// `X_A` stay fixed. `t = ∞` gives the projected minimum-norm solution.
pub fn gf_estimator(
    inst: &WeakFeaturesInstance,
    beta0_a: &DVector<f64>,
    t: f64,
) -> Result<DVector<f64>> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::arg(format!("time must be non-negative, got {t}")));
    }
    if beta0_a.len() != inst.p {
        return Err(Error::arg(format!(
            "initialisation has length {}, expected p = {}",
            beta0_a.len(),
            inst.p
        )));
    }
    let n = inst.n as f64;
    let c = inst.v_r.transpose() * beta0_a;
    let uy = inst.u_r.transpose() * &inst.y;
    let mut coef = DVector::zeros(c.len());
    for i in 0..c.len() {
        let l = inst.s[i];
        if l == 0.0 {
            coef[i] = c[i];
            continue;
        }
        let x = l * l * t / n;
        let decay = (-x).exp();
        // (1 - e^{-x}) / λ, kept accurate for small x
        let gain = -(-x).exp_m1() / l;
        coef[i] = decay * c[i] + gain * uy[i];
    }
    Ok(beta0_a + &inst.v_r * (coef - c))
}
