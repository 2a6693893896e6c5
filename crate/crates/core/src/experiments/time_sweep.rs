use std::time::Instant;

use super::config::TimeSweepConfig;
use super::grid::check_sorted;
use super::result::ExperimentResult;
use super::stamp;
use crate::mp::sgf_correction_asymptotic_checked;
use crate::weak_features::{
    sgd_minus_gd_expectation, FiniteOptions, FiniteSizeEstimator, SimOptions,
};
use crate::{Error, Result};

/// Columns of the time-sweep table.
pub const TIME_COLUMNS: [&str; 12] = [
    "t",
    "iters",
    "asymptotic",
    "asymptotic_converged",
    "finite",
    "finite_se",
    "sim",
    "sim_se",
    "regime",
    "within_band",
    "sim_exceeds_theory",
    "finite_between",
];

/// Regime codes: 0 for `t ≤ 0.1`, 1 for `1 ≤ t ≤ 10`, 2 for `t ≥ 100`, -1 otherwise.
pub fn regime(t: f64) -> f64 {
    if t <= 0.1 {
        0.0
    } else if (1.0..=10.0).contains(&t) {
        1.0
    } else if t >= 100.0 {
        2.0
    } else {
        -1.0
    }
}

/// SGD − GD over time for one α. Times are snapped to `t = vγ`; duplicate
/// snapped times are merged.
///
/// `within_band` is `|sim - asymptotic| ≤ max(3 SE, 10 %)` (checked only in
/// the small- and large-time regimes); `sim_exceeds_theory` is an
/// informational flag for the intermediate regime; `finite_between` marks rows
/// where the finite-size value lies between theory and simulation.
pub fn run_time_sweep(cfg: &TimeSweepConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    cfg.scale.validate()?;
    check_sorted("time", &cfg.times)?;
    if cfg.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::arg(
            "time-sweep times must be finite and non-negative",
        ));
    }
    let gamma = cfg.scale.gamma();
    let mut iters: Vec<usize> = cfg
        .times
        .iter()
        .map(|t| (t / gamma).round() as usize)
        .collect();
    iters.dedup();
    let times: Vec<f64> = iters.iter().map(|v| *v as f64 * gamma).collect();
    let p = cfg.scale.p_for(cfg.alpha)?;
    let model = cfg.scale.model(p)?;
    let opts = SimOptions {
        batch_size: cfg.scale.batch_size,
        threads: cfg.threads,
    };
    let sim = sgd_minus_gd_expectation(
        &model,
        &times,
        cfg.scale.subsets,
        cfg.scale.sgd_seeds,
        cfg.seed,
        opts,
    )?;
    let asym = cfg.scale.asymptotic(p, sim.norm_beta_sq, sim.delta_sq)?;
    let finite = if cfg.finite_replicates > 0 {
        let mut fm = model.clone();
        fm.delta_sq = sim.delta_sq;
        let fo = FiniteOptions {
            sampler: cfg.sampler,
            quad_panels: cfg.quad_panels,
            threads: cfg.threads,
        };
        Some(FiniteSizeEstimator::sample(
            &fm,
            cfg.finite_replicates,
            cfg.seed ^ 0x5eed_f1e7,
            fo,
        )?)
    } else {
        None
    };
    let mut out = ExperimentResult::new("time_sweep", &TIME_COLUMNS);
    for (k, &t) in sim.times.iter().enumerate() {
        let th = sgf_correction_asymptotic_checked(&asym, t)?;
        let (fv, fse) = match &finite {
            Some(est) => {
                let e = est.sgf_correction(t)?;
                (e.value, e.stderr)
            }
            None => (f64::NAN, f64::NAN),
        };
        let (s, se) = (sim.diff_mean[k], sim.diff_se[k]);
        let reg = regime(t);
        let band = (3.0 * se).max(0.1 * th.value.abs());
        let within = if reg == 0.0 || reg == 2.0 {
            ((s - th.value).abs() <= band) as u8 as f64
        } else {
            f64::NAN
        };
        let exceeds = if reg == 1.0 {
            (s >= th.value) as u8 as f64
        } else {
            f64::NAN
        };
        let between = if fv.is_nan() {
            f64::NAN
        } else {
            (fv >= th.value.min(s) && fv <= th.value.max(s)) as u8 as f64
        };
        out.push(vec![
            t,
            sim.iters[k] as f64,
            th.value,
            th.converged as u8 as f64,
            fv,
            fse,
            s,
            se,
            reg,
            within,
            exceeds,
            between,
        ]);
    }
    out.set_meta("config", cfg);
    out.set_meta("seed", cfg.seed);
    out.set_meta("p", p);
    out.set_meta("gamma", gamma);
    out.set_meta("delta_sq", sim.delta_sq);
    stamp(&mut out, start);
    Ok(out)
}
