use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ode::OdeTrajectory;
use super::system::{improved_drift, SdeSystem};
use crate::parallel::{task_rng, try_map_indexed};
use crate::{Error, Result};

/// Which Euler–Maruyama steps are stored in a [`PathEnsemble`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordPlan {
    /// Steps `0, k, 2k, …` and always the final step.
    Every(usize),
    /// An explicit set of step indices (sorted and deduplicated on use).
    At(Vec<usize>),
}

impl RecordPlan {
    fn steps(&self, total: usize) -> Result<Vec<usize>> {
        let mut v = match self {
            RecordPlan::Every(0) => return Err(Error::arg("record stride must be positive")),
            RecordPlan::Every(k) => {
                let mut v: Vec<usize> = (0..=total).step_by(*k).collect();
                v.push(total);
                v
            }
            RecordPlan::At(list) => list.clone(),
        };
        v.sort_unstable();
        v.dedup();
        if let Some(&last) = v.last() {
            if last > total {
                return Err(Error::arg(format!(
                    "record step {last} exceeds the step count {total}"
                )));
            }
        }
        Ok(v)
    }
}

/// Options for [`sample_paths`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOptions {
    /// Replace a gradient drift `-∇Φ` by `-∇(Φ + (γ/4)‖∇Φ‖²)`.
    pub improved_drift: bool,
    /// Initial time of the paths.
    pub t0: f64,
    pub record: RecordPlan,
    /// Worker threads (0 = all cores).
    pub threads: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            improved_drift: false,
            t0: 0.0,
            record: RecordPlan::Every(1),
            threads: 0,
        }
    }
}

/// Euler–Maruyama sample paths of the discrete companion process.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
    pub replicates: usize,
    pub gamma: f64,
    pub w0: DVector<f64>,
    /// Step indices stored in every path.
    pub record_steps: Vec<usize>,
    /// One `d × record_steps.len()` matrix per replicate.
    pub paths: Vec<DMatrix<f64>>,
    pub master_seed: u64,
    /// How per-replicate generators derive from the master seed.
    pub seed_derivation: String,
}

impl PathEnsemble {
    /// Column of the recorded states corresponding to time `t`, if stored.
    pub fn record_index(&self, t: f64) -> Result<usize> {
        let k = ((t - self.t0) / self.dt).round();
        if k < 0.0 || (self.t0 + k * self.dt - t).abs() > 1e-9 * self.dt + 1e-12 * t.abs() {
            return Err(Error::arg(format!(
                "time {t} is not a multiple of the step {} from t0 = {}",
                self.dt, self.t0
            )));
        }
        self.record_steps
            .binary_search(&(k as usize))
            .map_err(|_| Error::arg(format!("step {k} (t = {t}) was not recorded")))
    }

    /// States of all replicates at time `t`.
    pub fn states_at(&self, t: f64) -> Result<Vec<DVector<f64>>> {
        let c = self.record_index(t)?;
        Ok(self
            .paths
            .iter()
            .map(|p| p.column(c).into_owned())
            .collect())
    }
}

/// Simulates `R` Euler–Maruyama paths
/// `w_{k+1} = w_k + f Δτ + √γ G Δη_k`, `Δη_k ~ N(0, Δτ I_n)`.
///
/// Replicate `r` draws from the ChaCha8 stream `r` keyed by `seed`, so the
/// ensemble does not depend on the number of workers.
#[allow(clippy::too_many_arguments)]
pub fn sample_paths<S: SdeSystem + ?Sized>(
    system: &S,
    w0: &DVector<f64>,
    gamma: f64,
    dt: f64,
    steps: usize,
    replicates: usize,
    seed: u64,
    options: &SampleOptions,
) -> Result<PathEnsemble> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::arg(format!("step size must be positive, got {dt}")));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::arg(format!(
            "learning rate must be non-negative, got {gamma}"
        )));
    }
    if replicates == 0 {
        return Err(Error::InsufficientReplicates { needed: 1, got: 0 });
    }
    if w0.len() != system.dim_state() {
        return Err(Error::arg(format!(
            "initial state has length {}, system dimension is {}",
            w0.len(),
            system.dim_state()
        )));
    }
    if options.improved_drift && !system.is_gradient_flow() {
        return Err(Error::arg(
            "improved drift needs a system whose drift is a potential gradient",
        ));
    }
    let record_steps = options.record.steps(steps)?;
    let d = system.dim_state();
    let n = system.dim_noise();
    let sqrt_gdt = (gamma * dt).sqrt();
    let t0 = options.t0;
    let paths = try_map_indexed(options.threads, replicates, |r| {
        let mut rng = task_rng(seed, r as u64);
        let mut out = DMatrix::zeros(d, record_steps.len());
        let mut w = w0.clone();
        let mut next = 0;
        let mut noise = DVector::zeros(n);
        for k in 0..=steps {
            if next < record_steps.len() && record_steps[next] == k {
                out.set_column(next, &w);
                next += 1;
            }
            if k == steps {
                break;
            }
            let tau = t0 + k as f64 * dt;
            let f = if options.improved_drift {
                improved_drift(system, tau, &w, gamma)
            } else {
                system.drift(tau, &w)
            };
            let mut step = f * dt;
            if gamma > 0.0 {
                for e in noise.iter_mut() {
                    *e = StandardNormal.sample(&mut rng);
                }
                step += system.diffusion(tau, &w) * &noise * sqrt_gdt;
            }
            w += step;
            if !w.iter().all(|x| x.is_finite()) {
                return Err(Error::Divergence(format!(
                    "replicate {r} became non-finite at step {}",
                    k + 1
                )));
            }
        }
        Ok(out)
    })?;
    Ok(PathEnsemble {
        t0,
        dt,
        steps,
        replicates,
        gamma,
        w0: w0.clone(),
        record_steps,
        paths,
        master_seed: seed,
        seed_derivation: "ChaCha8Rng::seed_from_u64(master_seed) with set_stream(replicate_index)"
            .into(),
    })
}

/// Sample statistics of `z_r = (w_r(t) - w_ode(t))/√γ` across replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationStats {
    pub replicates: usize,
    pub mean_dev: DVector<f64>,
    pub mean_dev_se: DVector<f64>,
    /// Unbiased sample covariance of `z`.
    pub sample_cov: DMatrix<f64>,
    /// Entrywise standard errors of `sample_cov`.
    pub sample_cov_se: DMatrix<f64>,
}

/// Compares an ensemble with the deterministic flow at time `t`; both must
/// start at the same time.
pub fn empirical_fluctuation_stats(
    ensemble: &PathEnsemble,
    traj: &OdeTrajectory,
    gamma: f64,
    t: f64,
) -> Result<FluctuationStats> {
    let r = ensemble.replicates;
    if r < 2 {
        return Err(Error::InsufficientReplicates { needed: 2, got: r });
    }
    if (ensemble.t0 - traj.t0).abs() > 1e-12 {
        return Err(Error::arg(
            "ensemble and trajectory start at different times",
        ));
    }
    let states = ensemble.states_at(t)?;
    let mean_ode = traj.state_at(t)?;
    let d = mean_ode.len();
    if gamma == 0.0 {
        return Ok(FluctuationStats {
            replicates: r,
            mean_dev: DVector::zeros(d),
            mean_dev_se: DVector::zeros(d),
            sample_cov: DMatrix::zeros(d, d),
            sample_cov_se: DMatrix::zeros(d, d),
        });
    }
    let inv = 1.0 / gamma.sqrt();
    let z: Vec<DVector<f64>> = states.iter().map(|w| (w - mean_ode) * inv).collect();
    let rf = r as f64;
    let mean = z.iter().fold(DVector::zeros(d), |acc, v| acc + v) / rf;
    let centred: Vec<DVector<f64>> = z.iter().map(|v| v - &mean).collect();
    let mut cov = DMatrix::zeros(d, d);
    for c in &centred {
        cov += c * c.transpose();
    }
    cov /= rf - 1.0;
    let mut cov_se = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let prods: Vec<f64> = centred.iter().map(|c| c[i] * c[j]).collect();
            let m = prods.iter().sum::<f64>() / rf;
            let v = prods.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (rf - 1.0);
            cov_se[(i, j)] = (v / rf).sqrt();
        }
    }
    let mean_se = DVector::from_iterator(d, (0..d).map(|i| (cov[(i, i)] / rf).sqrt()));
    Ok(FluctuationStats {
        replicates: r,
        mean_dev: mean,
        mean_dev_se: mean_se,
        sample_cov: cov,
        sample_cov_se: cov_se,
    })
}
