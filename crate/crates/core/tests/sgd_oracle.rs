//! The SGD simulator against the exact first and second moments of
//! single-sample SGD on a fixed least-squares instance.
//!
//! With `β' = β + γ x_i (y_i - x_iᵀβ)` and `i` uniform, the mean follows GD
//! and the second moment `M = E ββᵀ` obeys a closed linear recursion, so the
//! expected test risk is known without sampling.

use nalgebra::{DMatrix, DVector};

use sgflow::parallel::{derive_seed, mean_and_stderr};
use sgflow::weak_features::{
    generate_instance, risk_given_estimator, sgd_run_at, Mode, ModelParams,
};

/// Exact `(E β_v, Cov β_v)` after `steps` single-sample SGD steps.
fn exact_moments(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    b0: &DVector<f64>,
    gamma: f64,
    steps: usize,
) -> (DVector<f64>, DMatrix<f64>) {
    let (n, p) = x.shape();
    let nf = n as f64;
    // (1/n) Σ_i w_i x_i x_iᵀ
    let weighted = |w: &DVector<f64>| {
        let mut s = DMatrix::zeros(p, p);
        for i in 0..n {
            let xi = x.row(i).transpose();
            s += &xi * xi.transpose() * (w[i] / nf);
        }
        s
    };
    let h = x.transpose() * x / nf;
    let b = x.transpose() * y / nf;
    let y2 = weighted(&y.map(|v| v * v));
    let mut m = b0.clone();
    let mut mm = b0 * b0.transpose();
    for _ in 0..steps {
        let q = DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let xi = x.row(i).transpose();
                (xi.transpose() * &mm * &xi)[(0, 0)]
            }),
        );
        let xm = x * &m;
        let c = weighted(&xm.component_mul(y));
        let next = &mm - (&h * &mm + &mm * &h) * gamma
            + weighted(&q) * (gamma * gamma)
            + (&m * b.transpose() + &b * m.transpose()) * gamma
            - c * (2.0 * gamma * gamma)
            + &y2 * (gamma * gamma);
        m = &m + (&b - &h * &m) * gamma;
        mm = next;
    }
    let cov = &mm - &m * m.transpose();
    (m, cov)
}

#[test]
fn simulated_sgd_risk_matches_exact_moments() {
    let params = ModelParams::new(12, 30, 8, 0.5, 0.0).unwrap();
    let inst = generate_instance(&params, 5).unwrap();
    let b0 = inst.beta0_a();
    let gamma = 0.05;
    let records = [5usize, 40, 200];
    let (exact, excess): (Vec<f64>, Vec<f64>) = records
        .iter()
        .map(|&v| {
            let (m, cov) = exact_moments(&inst.x_a, &inst.y, &b0, gamma, v);
            let half_trace = 0.5 * cov.trace();
            (
                risk_given_estimator(&inst.beta, &inst.subset, &m, inst.mu) + half_trace,
                half_trace,
            )
        })
        .unzip();

    let runs = 4000;
    let sims: Vec<Vec<f64>> = (0..runs)
        .map(|j| {
            sgd_run_at(
                &inst,
                &b0,
                gamma,
                Mode::Sgd,
                &records,
                derive_seed(99, j),
                1,
            )
            .unwrap()
            .risks
        })
        .collect();
    for (k, &v) in records.iter().enumerate() {
        let col: Vec<f64> = sims.iter().map(|r| r[k]).collect();
        let (mean, se) = mean_and_stderr(&col);
        let z = (mean - exact[k]) / se;
        // the SGD-over-GD excess must be resolvable, otherwise the check is vacuous
        assert!(
            excess[k] > 10.0 * se,
            "iteration {v}: excess {} vs se {se}",
            excess[k]
        );
        assert!(
            z.abs() <= 3.0,
            "iteration {v}: simulated {mean} +- {se}, exact {}, z = {z:.2}",
            exact[k]
        );
    }
}

#[test]
fn gd_mode_matches_the_exact_mean() {
    let params = ModelParams::new(10, 25, 15, 0.3, 0.0).unwrap();
    let inst = generate_instance(&params, 6).unwrap();
    let b0 = inst.beta0_a();
    let gamma = 0.03;
    let gd = sgd_run_at(&inst, &b0, gamma, Mode::Gd, &[50], 0, 1).unwrap();
    let (m, _) = exact_moments(&inst.x_a, &inst.y, &b0, gamma, 50);
    let expected = risk_given_estimator(&inst.beta, &inst.subset, &m, inst.mu);
    assert!((gd.risks[0] - expected).abs() < 1e-12 * expected);
}
