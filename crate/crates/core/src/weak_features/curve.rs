use serde::{Deserialize, Serialize};

use super::finite::{FiniteOptions, FiniteSizeEstimator};
use super::params::ModelParams;
use crate::mp::{gf_risk_asymptotic, sgf_correction_asymptotic, AsymptoticParams};
use crate::{Error, Result};

/// Where a curve's numbers came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FiniteSizeMonteCarlo,
    Asymptotic,
    Simulation,
}

/// Risks at one time. `sgf_risk` is always `gf_risk + sgf_correction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskRecord {
    pub t: f64,
    pub gf_risk: f64,
    pub gf_se: f64,
    pub sgf_correction: f64,
    pub sgf_se: f64,
    pub sgf_risk: f64,
    pub train_error: Option<f64>,
    pub train_se: Option<f64>,
}

impl RiskRecord {
    fn new(t: f64, gf: (f64, f64), corr: (f64, f64), train: Option<(f64, f64)>) -> Self {
        RiskRecord {
            t,
            gf_risk: gf.0,
            gf_se: gf.1,
            sgf_correction: corr.0,
            sgf_se: corr.1,
            sgf_risk: gf.0 + corr.0,
            train_error: train.map(|x| x.0),
            train_se: train.map(|x| x.1),
        }
    }
}

/// Test-risk time evolution under GF and SGF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub times: Vec<f64>,
    pub records: Vec<RiskRecord>,
    pub provenance: Provenance,
    /// Spectra averaged per time point (0 for deterministic curves).
    pub replicates: usize,
    pub seed: Option<u64>,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::arg("time grid is empty"));
    }
    if times.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(Error::arg("times must be non-negative"));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("times must be strictly increasing"));
    }
    Ok(())
}

/// Finite-size expected risks (GF, SGF correction, train error) from one
/// shared set of sampled spectra.
pub fn finite_risk_curve(
    params: &ModelParams,
    times: &[f64],
    replicates: usize,
    seed: u64,
    options: FiniteOptions,
) -> Result<RiskCurve> {
    check_times(times)?;
    let est = FiniteSizeEstimator::sample(params, replicates, seed, options)?;
    let mut records = Vec::with_capacity(times.len());
    for &t in times {
        let gf = est.gf_risk(t)?;
        let corr = est.sgf_correction(t)?;
        let train = est.train_error(t)?;
        records.push(RiskRecord::new(
            t,
            (gf.value, gf.stderr),
            (corr.value, corr.stderr),
            Some((train.value, train.stderr)),
        ));
    }
    Ok(RiskCurve {
        times: times.to_vec(),
        records,
        provenance: Provenance::FiniteSizeMonteCarlo,
        replicates,
        seed: Some(seed),
    })
}

/// Large-system risks; `t = ∞` uses the closed-form limits.
pub fn asymptotic_risk_curve(params: &AsymptoticParams, times: &[f64]) -> Result<RiskCurve> {
    check_times(times)?;
    params.validate()?;
    let mut records = Vec::with_capacity(times.len());
    for &t in times {
        let gf = gf_risk_asymptotic(params, t)?;
        let corr = sgf_correction_asymptotic(params, t)?;
        records.push(RiskRecord::new(t, (gf, 0.0), (corr, 0.0), None));
    }
    Ok(RiskCurve {
        times: times.to_vec(),
        records,
        provenance: Provenance::Asymptotic,
        replicates: 0,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decomposition_holds() {
        let p = ModelParams::new(30, 60, 20, 0.5, 0.02).unwrap();
        let c = finite_risk_curve(
            &p,
            &[0.0, 0.5, 5.0, f64::INFINITY],
            8,
            1,
            FiniteOptions::default(),
        )
        .unwrap();
        for r in &c.records {
            assert_eq!(r.sgf_risk, r.gf_risk + r.sgf_correction);
            assert!(r.sgf_correction >= -r.sgf_se);
        }
        assert_eq!(c.records[0].sgf_correction, 0.0);
        let a = asymptotic_risk_curve(&AsymptoticParams::default(), &[0.0, 1.0, f64::INFINITY])
            .unwrap();
        assert!((a.records[2].sgf_correction - 0.02625).abs() < 1e-15);
        assert!((a.records[2].gf_risk - 1.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        let a = AsymptoticParams::default();
        assert!(asymptotic_risk_curve(&a, &[]).is_err());
        assert!(asymptotic_risk_curve(&a, &[1.0, 0.5]).is_err());
    }
}
