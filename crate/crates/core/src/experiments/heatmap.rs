use std::time::Instant;

use super::config::HeatmapConfig;
use super::grid::check_sorted;
use super::result::ExperimentResult;
use super::stamp;
use crate::mp::{sgf_correction_asymptotic_checked, AsymptoticParams};
use crate::parallel::try_map_indexed;
use crate::{Error, Result};

pub const HEATMAP_COLUMNS: [&str; 4] = ["t", "alpha", "value", "converged"];

/// Asymptotic SGF correction in long form, sorted by `t` then `α`.
pub fn run_heatmap(cfg: &HeatmapConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    check_sorted("alpha", &cfg.alphas)?;
    check_sorted("time", &cfg.times)?;
    if cfg.times.iter().any(|t| *t < 0.0) {
        return Err(Error::arg("times must be non-negative"));
    }
    let params: Vec<AsymptoticParams> = cfg
        .alphas
        .iter()
        .map(|&alpha| {
            let p = AsymptoticParams {
                alpha,
                psi: cfg.psi,
                mu: cfg.mu,
                gamma_prime: cfg.gamma_prime,
                norm_beta_sq: cfg.norm_beta_sq,
                delta_sq: cfg.delta_sq,
            };
            p.validate().map(|_| p)
        })
        .collect::<Result<_>>()?;
    let na = params.len();
    let cells = try_map_indexed(cfg.threads, cfg.times.len() * na, |k| {
        let (ti, ai) = (k / na, k % na);
        let q = sgf_correction_asymptotic_checked(&params[ai], cfg.times[ti])?;
        Ok(vec![
            cfg.times[ti],
            cfg.alphas[ai],
            q.value,
            q.converged as u8 as f64,
        ])
    })?;
    let mut out = ExperimentResult::new("heatmap", &HEATMAP_COLUMNS);
    for row in cells {
        out.push(row);
    }
    out.set_meta("config", cfg);
    stamp(&mut out, start);
    Ok(out)
}
