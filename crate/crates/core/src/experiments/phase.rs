use std::time::Instant;

use super::config::PhaseSweepConfig;
use super::grid::check_sorted;
use super::result::ExperimentResult;
use super::stamp;
use crate::mp::{sgf_correction_asymptotic_checked, sgf_correction_limit};
use crate::weak_features::{sgd_minus_gd_expectation, SimOptions};
use crate::Result;

/// Columns of the phase-sweep table.
pub const PHASE_COLUMNS: [&str; 10] = [
    "alpha",
    "p",
    "t",
    "theory_limit",
    "theory_t",
    "theory_t_converged",
    "sim_diff",
    "sim_se",
    "z_score",
    "within_3se",
];

/// SGD − GD at `cfg.t` against the infinite-time correction, per α.
/// `z_score = (sim_diff - theory_limit) / sim_se`.
pub fn run_phase_sweep(cfg: &PhaseSweepConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    cfg.scale.validate()?;
    check_sorted("alpha", &cfg.alphas)?;
    if !(cfg.t > 0.0 && cfg.t.is_finite()) {
        return Err(crate::Error::arg(
            "phase sweep time must be positive and finite",
        ));
    }
    let ps: Vec<usize> = cfg
        .alphas
        .iter()
        .map(|a| cfg.scale.p_for(*a))
        .collect::<Result<_>>()?;
    let mut out = ExperimentResult::new("phase_sweep", &PHASE_COLUMNS);
    let opts = SimOptions {
        batch_size: cfg.scale.batch_size,
        threads: cfg.threads,
    };
    let mut delta_sq = f64::NAN;
    for &p in &ps {
        let model = cfg.scale.model(p)?;
        let diff = sgd_minus_gd_expectation(
            &model,
            &[cfg.t],
            cfg.scale.subsets,
            cfg.scale.sgd_seeds,
            cfg.seed,
            opts,
        )?;
        delta_sq = diff.delta_sq;
        let asym = cfg.scale.asymptotic(p, diff.norm_beta_sq, diff.delta_sq)?;
        let limit = sgf_correction_limit(&asym)?;
        let at_t = sgf_correction_asymptotic_checked(&asym, diff.times[0])?;
        let (m, se) = (diff.diff_mean[0], diff.diff_se[0]);
        let z = if se > 0.0 { (m - limit) / se } else { f64::NAN };
        let within = ((m - limit).abs() <= 3.0 * se) as u8 as f64;
        out.push(vec![
            asym.alpha,
            p as f64,
            diff.times[0],
            limit,
            at_t.value,
            at_t.converged as u8 as f64,
            m,
            se,
            z,
            within,
        ]);
    }
    out.set_meta("config", cfg);
    out.set_meta("seed", cfg.seed);
    out.set_meta("gamma", cfg.scale.gamma());
    out.set_meta("delta_sq", delta_sq);
    stamp(&mut out, start);
    Ok(out)
}
