use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::instance::{generate_instance, sphere, WeakFeaturesInstance};
use super::params::{ModelParams, VectorPolicy};
use crate::parallel::{derive_seed, mean_and_stderr, task_rng, try_map_indexed};
use crate::{Error, Result};

/// Discrete optimiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One uniformly drawn sample (or mini-batch) per step.
    Sgd,
    /// Full-batch gradient descent.
    Gd,
}

/// Options for the discrete simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Samples per SGD step, drawn with replacement; gradients are averaged.
    pub batch_size: usize,
    /// Worker threads for subset loops (0 = all cores).
    pub threads: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            batch_size: 1,
            threads: 0,
        }
    }
}

/// Risk recorded along one optimisation run; `t = v γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTrajectory {
    pub iters: Vec<usize>,
    pub times: Vec<f64>,
    pub risks: Vec<f64>,
    pub train_losses: Vec<f64>,
}

struct RiskProbe {
    beta_a: DVector<f64>,
    off_sq: f64,
    mu_sq: f64,
}

impl RiskProbe {
    fn new(inst: &WeakFeaturesInstance) -> Self {
        let beta_a = inst.beta_a();
        let off_sq = inst.beta.norm_squared() - beta_a.norm_squared();
        RiskProbe {
            beta_a,
            off_sq: off_sq.max(0.0),
            mu_sq: inst.mu * inst.mu,
        }
    }

    fn risk(&self, b: &DVector<f64>) -> f64 {
        0.5 * ((&self.beta_a - b).norm_squared() + self.off_sq + self.mu_sq)
    }
}

fn validate_run(inst: &WeakFeaturesInstance, beta0_a: &DVector<f64>, gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::arg(format!(
            "learning rate must be positive, got {gamma}"
        )));
    }
    if beta0_a.len() != inst.p {
        return Err(Error::arg(format!(
            "initialisation has length {}, expected p = {}",
            beta0_a.len(),
            inst.p
        )));
    }
    Ok(())
}

fn sorted_unique(iters: &[usize]) -> Vec<usize> {
    let mut v = iters.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn divergence(gamma: f64, step: usize) -> Error {
    Error::Divergence(format!(
        "iterate became non-finite at step {step}; the learning rate {gamma} is too large for the largest eigenvalue of X_A^T X_A / n"
    ))
}

/// Runs `iters` steps of SGD or GD from `β̂⁰_A`, recording the test risk
/// every `record_every` steps (and at the start and end).
#[allow(clippy::too_many_arguments)]
pub fn sgd_run(
    inst: &WeakFeaturesInstance,
    beta0_a: &DVector<f64>,
    gamma: f64,
    iters: usize,
    mode: Mode,
    record_every: usize,
    seed: u64,
) -> Result<RiskTrajectory> {
    if iters == 0 || record_every == 0 {
        return Err(Error::arg("iters and record_every must be positive"));
    }
    let mut at: Vec<usize> = (0..=iters).step_by(record_every).collect();
    at.push(iters);
    sgd_run_at(inst, beta0_a, gamma, mode, &at, seed, 1)
}

/// [`sgd_run`] recording at an explicit set of iteration counts, with a
/// mini-batch size for SGD. GD here iterates literally; see [`gd_spectral`]
/// for the equivalent closed form.
pub fn sgd_run_at(
    inst: &WeakFeaturesInstance,
    beta0_a: &DVector<f64>,
    gamma: f64,
    mode: Mode,
    record_iters: &[usize],
    seed: u64,
    batch_size: usize,
) -> Result<RiskTrajectory> {
    validate_run(inst, beta0_a, gamma)?;
    if batch_size == 0 {
        return Err(Error::arg("batch_size must be positive"));
    }
    let at = sorted_unique(record_iters);
    let last = at.last().copied().unwrap_or(0);
    let probe = RiskProbe::new(inst);
    let p = inst.p;
    let n = inst.n;
    let mut out = RiskTrajectory {
        iters: vec![],
        times: vec![],
        risks: vec![],
        train_losses: vec![],
    };
    let mut beta = beta0_a.clone();
    let mut next = 0;
    let record = |v: usize, b: &DVector<f64>, out: &mut RiskTrajectory| {
        out.iters.push(v);
        out.times.push(v as f64 * gamma);
        out.risks.push(probe.risk(b));
        out.train_losses.push(inst.train_loss(b));
    };
    match mode {
        Mode::Sgd => {
            let xt = inst.x_a.transpose(); // column k is sample k
            let xs = xt.as_slice();
            let y = inst.y.as_slice();
            let mut rng = task_rng(seed, 0);
            let scale = gamma / batch_size as f64;
            let mut grad = vec![0.0; p];
            for v in 0..=last {
                if next < at.len() && at[next] == v {
                    record(v, &beta, &mut out);
                    next += 1;
                }
                if v == last {
                    break;
                }
                let b = beta.as_mut_slice();
                if batch_size == 1 {
                    let k = rng.gen_range(0..n);
                    let row = &xs[k * p..(k + 1) * p];
                    let resid = y[k] - row.iter().zip(b.iter()).map(|(x, w)| x * w).sum::<f64>();
                    if !resid.is_finite() {
                        return Err(divergence(gamma, v));
                    }
                    let c = scale * resid;
                    for (w, x) in b.iter_mut().zip(row) {
                        *w += c * x;
                    }
                } else {
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for _ in 0..batch_size {
                        let k = rng.gen_range(0..n);
                        let row = &xs[k * p..(k + 1) * p];
                        let resid =
                            y[k] - row.iter().zip(b.iter()).map(|(x, w)| x * w).sum::<f64>();
                        for (g, x) in grad.iter_mut().zip(row) {
                            *g += resid * x;
                        }
                    }
                    if !grad.iter().all(|g| g.is_finite()) {
                        return Err(divergence(gamma, v));
                    }
                    for (w, g) in b.iter_mut().zip(&grad) {
                        *w += scale * g;
                    }
                }
            }
        }
        Mode::Gd => {
            let nf = n as f64;
            let h = inst.x_a.transpose() * &inst.x_a / nf;
            let rhs = inst.x_a.transpose() * &inst.y / nf;
            for v in 0..=last {
                if next < at.len() && at[next] == v {
                    if !beta.iter().all(|x| x.is_finite()) {
                        return Err(divergence(gamma, v));
                    }
                    record(v, &beta, &mut out);
                    next += 1;
                }
                if v == last {
                    break;
                }
                let step = (&rhs - &h * &beta) * gamma;
                beta += step;
            }
        }
    }
    Ok(out)
}

/// Gradient descent in closed form: in the right-singular basis each
/// component contracts by `(1 - γσ_i)` per step towards `u_iᵀy/λ_i`, and
/// null-space components stay put. Identical to iterating up to rounding.
pub fn gd_spectral(
    inst: &WeakFeaturesInstance,
    beta0_a: &DVector<f64>,
    gamma: f64,
    record_iters: &[usize],
) -> Result<RiskTrajectory> {
    validate_run(inst, beta0_a, gamma)?;
    let at = sorted_unique(record_iters);
    let nf = inst.n as f64;
    let c = inst.v_r.transpose() * beta0_a;
    let uy = inst.u_r.transpose() * &inst.y;
    let sig: Vec<f64> = inst.s.iter().map(|l| l * l / nf).collect();
    if let Some(max) = sig.iter().copied().reduce(f64::max) {
        if gamma * max >= 2.0 {
            return Err(Error::Divergence(format!(
                "gradient descent diverges: gamma * lambda_max = {} >= 2",
                gamma * max
            )));
        }
    }
    let probe = RiskProbe::new(inst);
    let mut out = RiskTrajectory {
        iters: vec![],
        times: vec![],
        risks: vec![],
        train_losses: vec![],
    };
    for &v in &at {
        let vi = i32::try_from(v).map_err(|_| Error::arg("iteration count too large"))?;
        let mut delta = DVector::zeros(c.len());
        for i in 0..c.len() {
            if inst.s[i] == 0.0 {
                continue;
            }
            let target = uy[i] / inst.s[i];
            let factor = (1.0 - gamma * sig[i]).powi(vi);
            delta[i] = (target + (c[i] - target) * factor) - c[i];
        }
        let b = beta0_a + &inst.v_r * delta;
        out.iters.push(v);
        out.times.push(v as f64 * gamma);
        out.risks.push(probe.risk(&b));
        out.train_losses.push(inst.train_loss(&b));
    }
    Ok(out)
}

/// Freezes `β` and `β̂⁰`: unit-sphere draws come from stream `u64::MAX` of
/// `seed`, given vectors are kept. `delta_sq` and `norm_beta` then describe
/// the actual draw.
pub fn fix_vectors(params: &ModelParams, seed: u64) -> Result<ModelParams> {
    match &params.vectors {
        VectorPolicy::Given { .. } => Ok(params.clone()),
        VectorPolicy::UnitSphere => {
            let mut rng = task_rng(seed, u64::MAX);
            let beta = sphere(&mut rng, params.d, params.norm_beta);
            let beta0 = sphere(&mut rng, params.d, 1.0);
            params
                .clone()
                .with_vectors(beta.as_slice().to_vec(), beta0.as_slice().to_vec())
        }
    }
}

/// Mean GD test risk over `subsets` instances sharing `β`, `β̂⁰` (see
/// [`fix_vectors`]), at `t = round(t/γ)·γ`. Returns `(times, mean, se)`.
pub fn gd_risk_expectation(
    params: &ModelParams,
    t_grid: &[f64],
    subsets: usize,
    seed: u64,
    threads: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    params.validate()?;
    if subsets < 2 {
        return Err(Error::InsufficientReplicates {
            needed: 2,
            got: subsets,
        });
    }
    if !(params.gamma > 0.0) {
        return Err(Error::arg("GD needs a positive learning rate"));
    }
    let fixed = fix_vectors(params, seed)?;
    let iters: Vec<usize> = t_grid
        .iter()
        .map(|t| (t / params.gamma).round() as usize)
        .collect();
    let uniq = sorted_unique(&iters);
    let risks = try_map_indexed(threads, subsets, |s| {
        let inst = generate_instance(&fixed, derive_seed(seed, s as u64))?;
        Ok(gd_spectral(&inst, &inst.beta0_a(), params.gamma, &uniq)?.risks)
    })?;
    let mut times = Vec::new();
    let mut mean = Vec::new();
    let mut se = Vec::new();
    for &v in &iters {
        let k = uniq.binary_search(&v).expect("iteration present");
        let col: Vec<f64> = risks.iter().map(|r| r[k]).collect();
        let (m, e) = mean_and_stderr(&col);
        times.push(v as f64 * params.gamma);
        mean.push(m);
        se.push(e);
    }
    Ok((times, mean, se))
}

/// Paired SGD − GD test-risk differences averaged over random subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffCurve {
    /// Times `t = v γ` actually simulated.
    pub times: Vec<f64>,
    pub iters: Vec<usize>,
    pub diff_mean: Vec<f64>,
    pub diff_se: Vec<f64>,
    pub gd_mean: Vec<f64>,
    pub gd_se: Vec<f64>,
    pub sgd_mean: Vec<f64>,
    pub sgd_se: Vec<f64>,
    pub subsets: usize,
    pub sgd_seeds: usize,
    /// `‖β - β̂⁰‖²` of the shared ground truth and initialisation.
    pub delta_sq: f64,
    pub norm_beta_sq: f64,
}

/// For each of `subsets` fresh instances, runs GD (closed form) and
/// `sgd_seeds` SGD runs from the same `β̂⁰`, and averages the risk
/// differences at `t = round(t/γ)·γ`.
///
/// `β` and `β̂⁰` are drawn once (stream `u64::MAX` of `seed`) unless given,
/// so only the data and the subset vary between subsets.
pub fn sgd_minus_gd_expectation(
    params: &ModelParams,
    t_grid: &[f64],
    subsets: usize,
    sgd_seeds: usize,
    seed: u64,
    options: SimOptions,
) -> Result<DiffCurve> {
    params.validate()?;
    if subsets < 2 {
        return Err(Error::InsufficientReplicates {
            needed: 2,
            got: subsets,
        });
    }
    if sgd_seeds == 0 {
        return Err(Error::arg("sgd_seeds must be at least 1"));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::arg(
            "time grid must be non-empty, finite and non-negative",
        ));
    }
    if !(params.gamma > 0.0) {
        return Err(Error::arg("simulation needs a positive learning rate"));
    }
    let fixed = fix_vectors(params, seed)?;
    let iters: Vec<usize> = t_grid
        .iter()
        .map(|t| (t / params.gamma).round() as usize)
        .collect();
    let uniq = sorted_unique(&iters);
    let batch = options.batch_size.max(params.batch_size);
    let per_subset = try_map_indexed(options.threads, subsets, |s| {
        let inst_seed = derive_seed(seed, s as u64);
        let inst = generate_instance(&fixed, inst_seed)?;
        let b0 = inst.beta0_a();
        let gd = gd_spectral(&inst, &b0, params.gamma, &uniq)?;
        let mut sgd = vec![0.0; uniq.len()];
        for j in 0..sgd_seeds {
            let run = sgd_run_at(
                &inst,
                &b0,
                params.gamma,
                Mode::Sgd,
                &uniq,
                derive_seed(inst_seed, j as u64),
                batch,
            )?;
            for (acc, r) in sgd.iter_mut().zip(&run.risks) {
                *acc += r / sgd_seeds as f64;
            }
        }
        Ok((gd.risks, sgd))
    })?;
    let mut curve = DiffCurve {
        times: vec![],
        iters: vec![],
        diff_mean: vec![],
        diff_se: vec![],
        gd_mean: vec![],
        gd_se: vec![],
        sgd_mean: vec![],
        sgd_se: vec![],
        subsets,
        sgd_seeds,
        delta_sq: fixed.delta_sq,
        norm_beta_sq: fixed.norm_beta * fixed.norm_beta,
    };
    for &v in &iters {
        let k = uniq.binary_search(&v).expect("iteration present");
        let gd: Vec<f64> = per_subset.iter().map(|(g, _)| g[k]).collect();
        let sgd: Vec<f64> = per_subset.iter().map(|(_, s)| s[k]).collect();
        let diff: Vec<f64> = gd.iter().zip(&sgd).map(|(g, s)| s - g).collect();
        let (dm, ds) = mean_and_stderr(&diff);
        let (gm, gs) = mean_and_stderr(&gd);
        let (sm, ss) = mean_and_stderr(&sgd);
        curve.times.push(v as f64 * params.gamma);
        curve.iters.push(v);
        curve.diff_mean.push(dm);
        curve.diff_se.push(ds);
        curve.gd_mean.push(gm);
        curve.gd_se.push(gs);
        curve.sgd_mean.push(sm);
        curve.sgd_se.push(ss);
    }
    Ok(curve)
}
