use std::time::Instant;

use super::config::GfCurvesConfig;
use super::grid::check_sorted;
use super::result::ExperimentResult;
use super::stamp;
use crate::mp::gf_risk_asymptotic_checked;
use crate::weak_features::{fix_vectors, gd_risk_expectation, FiniteOptions, FiniteSizeEstimator};
use crate::{Error, Result};

pub const GF_COLUMNS: [&str; 9] = [
    "alpha",
    "p",
    "t",
    "theory_gf",
    "theory_converged",
    "train_finite",
    "train_finite_se",
    "gd_sim",
    "gd_se",
];

/// GF test risk on an `(α, t)` grid: asymptotic theory, the finite-size
/// train error and GD simulation. Rows are sorted by α then `t`; infinite
/// times use the closed-form limit and have no GD points. At `α = 1` the
/// infinite-time risk diverges and is left empty.
pub fn run_gf_curves(cfg: &GfCurvesConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    cfg.scale.validate()?;
    check_sorted("alpha", &cfg.alphas)?;
    check_sorted("time", &cfg.times)?;
    if cfg.times.iter().any(|t| *t < 0.0) {
        return Err(Error::arg("times must be non-negative"));
    }
    let finite_times: Vec<f64> = cfg
        .times
        .iter()
        .copied()
        .filter(|t| t.is_finite())
        .collect();
    let mut out = ExperimentResult::new("gf_curves", &GF_COLUMNS);
    for &alpha in &cfg.alphas {
        let p = cfg.scale.p_for(alpha)?;
        let model = fix_vectors(&cfg.scale.model(p)?, cfg.seed)?;
        let asym = cfg
            .scale
            .asymptotic(p, model.norm_beta * model.norm_beta, model.delta_sq)?;
        let gd = if finite_times.is_empty() {
            None
        } else {
            Some(gd_risk_expectation(
                &model,
                &finite_times,
                cfg.scale.subsets,
                cfg.seed,
                cfg.threads,
            )?)
        };
        let train = if cfg.finite_replicates > 0 {
            let fo = FiniteOptions {
                sampler: cfg.sampler,
                threads: cfg.threads,
                ..Default::default()
            };
            Some(FiniteSizeEstimator::sample(
                &model,
                cfg.finite_replicates,
                cfg.seed ^ 0x7a19,
                fo,
            )?)
        } else {
            None
        };
        let mut fi = 0;
        for &t in &cfg.times {
            let (t_row, gd_m, gd_se) = match (&gd, t.is_finite()) {
                (Some((ts, m, se)), true) => {
                    let r = (ts[fi], m[fi], se[fi]);
                    fi += 1;
                    r
                }
                _ => (t, f64::NAN, f64::NAN),
            };
            let (th, conv) = match gf_risk_asymptotic_checked(&asym, t_row) {
                Ok(q) => (q.value, q.converged as u8 as f64),
                Err(Error::ThresholdDivergence) => (f64::NAN, 0.0),
                Err(e) => return Err(e),
            };
            let (tr, tr_se) = match &train {
                Some(est) => {
                    let e = est.train_error(t_row)?;
                    (e.value, e.stderr)
                }
                None => (f64::NAN, f64::NAN),
            };
            out.push(vec![
                asym.alpha, p as f64, t_row, th, conv, tr, tr_se, gd_m, gd_se,
            ]);
        }
    }
    out.set_meta("config", cfg);
    out.set_meta("seed", cfg.seed);
    out.set_meta("gamma", cfg.scale.gamma());
    stamp(&mut out, start);
    Ok(out)
}
