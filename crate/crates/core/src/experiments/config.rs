use serde::{Deserialize, Serialize};

use super::grid::{linear_grid, log_grid};
use crate::mp::AsymptoticParams;
use crate::weak_features::{ModelParams, SpectrumSampler};
use crate::{Error, Result};

/// Time grids may contain `inf`, which JSON cannot represent as a number;
/// non-finite entries are written as the strings `"inf"`, `"-inf"`, `"nan"`.
pub(crate) mod grid_serde {
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Num(f64),
        Word(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = v
            .iter()
            .map(|&x| match x {
                x if x.is_finite() => Entry::Num(x),
                x if x.is_nan() => Entry::Word("nan".into()),
                x if x > 0.0 => Entry::Word("inf".into()),
                _ => Entry::Word("-inf".into()),
            })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| match e {
                Entry::Num(x) => Ok(x),
                Entry::Word(w) => match w.as_str() {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    other => Err(D::Error::custom(format!("invalid grid entry {other:?}"))),
                },
            })
            .collect()
    }
}

/// A grid as JSON with non-finite entries spelled out.
pub(crate) fn grid_json(v: &[f64]) -> serde_json::Value {
    grid_serde::serialize(v, serde_json::value::Serializer).expect("grids always serialize")
}

fn default_times() -> Vec<f64> {
    log_grid(1e-3, 1e3, 13).expect("static grid")
}

/// Settings shared by the simulation-backed experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationScale {
    pub n: usize,
    pub d: usize,
    pub mu: f64,
    /// `γ' = γ d`; the learning rate is `γ'/d`.
    pub gamma_prime: f64,
    pub norm_beta: f64,
    pub subsets: usize,
    pub sgd_seeds: usize,
    pub batch_size: usize,
}

impl Default for SimulationScale {
    fn default() -> Self {
        SimulationScale {
            n: 80,
            d: 200,
            mu: 0.5,
            gamma_prime: 1.0,
            norm_beta: 1.0,
            subsets: 300,
            sgd_seeds: 1,
            batch_size: 1,
        }
    }
}

impl SimulationScale {
    /// The paper-scale setting (`d = 1000`, `n = 400`, 1000 subsets).
    pub fn paper() -> Self {
        SimulationScale {
            n: 400,
            d: 1000,
            subsets: 1000,
            ..Default::default()
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_prime / self.d as f64
    }

    pub fn psi(&self) -> f64 {
        self.d as f64 / self.n as f64
    }

    /// `p = round(α n)`, at least 1.
    pub fn p_for(&self, alpha: f64) -> Result<usize> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::arg(format!("alpha must be positive, got {alpha}")));
        }
        let p = ((alpha * self.n as f64).round() as usize).max(1);
        if p > self.d {
            return Err(Error::arg(format!(
                "alpha = {alpha} gives p = {p} > d = {}; alpha must not exceed psi = {}",
                self.d,
                self.psi()
            )));
        }
        Ok(p)
    }

    pub fn model(&self, p: usize) -> Result<ModelParams> {
        let mut m = ModelParams::new(self.n, self.d, p, self.mu, self.gamma())?;
        m.norm_beta = self.norm_beta;
        m.batch_size = self.batch_size;
        m.validate()?;
        Ok(m)
    }

    /// Large-system parameters matching `p` at this scale.
    pub fn asymptotic(
        &self,
        p: usize,
        norm_beta_sq: f64,
        delta_sq: f64,
    ) -> Result<AsymptoticParams> {
        let a = AsymptoticParams {
            alpha: p as f64 / self.n as f64,
            psi: self.psi(),
            mu: self.mu,
            gamma_prime: self.gamma_prime,
            norm_beta_sq,
            delta_sq,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::arg("n and d must be positive"));
        }
        if self.subsets < 2 {
            return Err(Error::InsufficientReplicates {
                needed: 2,
                got: self.subsets,
            });
        }
        if self.sgd_seeds == 0 || self.batch_size == 0 {
            return Err(Error::arg("sgd_seeds and batch_size must be positive"));
        }
        if !(self.gamma_prime > 0.0 && self.gamma_prime.is_finite()) {
            return Err(Error::arg("gamma_prime must be positive"));
        }
        if !(self.mu >= 0.0 && self.norm_beta >= 0.0) {
            return Err(Error::arg("mu and norm_beta must be non-negative"));
        }
        Ok(())
    }
}

/// SGD − GD at a large time across α against the infinite-time correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSweepConfig {
    pub scale: SimulationScale,
    pub alphas: Vec<f64>,
    /// Stand-in for `t → ∞`.
    pub t: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for PhaseSweepConfig {
    fn default() -> Self {
        PhaseSweepConfig {
            scale: SimulationScale::default(),
            alphas: vec![0.125, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
            t: 50.0,
            seed: 0,
            threads: 0,
        }
    }
}

/// SGD − GD over time for one α: asymptotic theory, finite-size theory and
/// simulation side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSweepConfig {
    pub scale: SimulationScale,
    pub alpha: f64,
    #[serde(with = "grid_serde")]
    pub times: Vec<f64>,
    /// Spectra for the finite-size expectation (0 skips it).
    pub finite_replicates: usize,
    pub quad_panels: usize,
    pub sampler: SpectrumSampler,
    pub seed: u64,
    pub threads: usize,
}

impl Default for TimeSweepConfig {
    fn default() -> Self {
        TimeSweepConfig {
            scale: SimulationScale::default(),
            alpha: 0.5,
            times: default_times(),
            finite_replicates: 100,
            quad_panels: 64,
            sampler: SpectrumSampler::default(),
            seed: 0,
            threads: 0,
        }
    }
}

/// Asymptotic SGF correction on a `(t, α)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapConfig {
    pub psi: f64,
    pub mu: f64,
    pub gamma_prime: f64,
    pub norm_beta_sq: f64,
    pub delta_sq: f64,
    pub alphas: Vec<f64>,
    #[serde(with = "grid_serde")]
    pub times: Vec<f64>,
    pub threads: usize,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        let a = AsymptoticParams::default();
        HeatmapConfig {
            psi: a.psi,
            mu: a.mu,
            gamma_prime: a.gamma_prime,
            norm_beta_sq: a.norm_beta_sq,
            delta_sq: a.delta_sq,
            alphas: linear_grid(0.1, 2.5, 25).expect("static grid"),
            times: default_times(),
            threads: 0,
        }
    }
}

/// GF test risk over `(t, α)` with GD simulation and finite-size train error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GfCurvesConfig {
    pub scale: SimulationScale,
    pub alphas: Vec<f64>,
    #[serde(with = "grid_serde")]
    pub times: Vec<f64>,
    /// Spectra per point for the train error (0 skips it).
    pub finite_replicates: usize,
    pub sampler: SpectrumSampler,
    pub seed: u64,
    pub threads: usize,
}

impl Default for GfCurvesConfig {
    fn default() -> Self {
        GfCurvesConfig {
            scale: SimulationScale {
                subsets: 100,
                ..Default::default()
            },
            alphas: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
            times: vec![0.1, 1.0, 10.0, 100.0, f64::INFINITY],
            finite_replicates: 50,
            sampler: SpectrumSampler::default(),
            seed: 0,
            threads: 0,
        }
    }
}

/// The systems the SDE validation can run on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Scenario {
    /// `h = a`, `σ = b`.
    Constant { a: f64, b: f64 },
    /// `h = 1`, `σ(s) = e^{-s}`.
    Pinning,
    /// `h(s) = 1 + s/2`, `σ(s) = 1/(1 + s)`.
    TimeVarying,
    /// The SGF SDE of a small weak-features instance.
    WeakFeatures {
        n: usize,
        d: usize,
        p: usize,
        mu: f64,
    },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Constant { .. } => "constant",
            Scenario::Pinning => "pinning",
            Scenario::TimeVarying => "time_varying",
            Scenario::WeakFeatures { .. } => "weak_features",
        }
    }

    /// Parses `constant | pinning | timevarying | time_varying | weakfeatures | weak_features`
    /// with default parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "constant" => Ok(Scenario::Constant { a: 1.0, b: 1.0 }),
            "pinning" => Ok(Scenario::Pinning),
            "timevarying" | "time_varying" => Ok(Scenario::TimeVarying),
            "weakfeatures" | "weak_features" => Ok(Scenario::WeakFeatures { n: 4, d: 6, p: 3, mu: 0.5 }),
            other => Err(Error::arg(format!(
                "unknown scenario {other:?}; expected constant, pinning, timevarying or weakfeatures"
            ))),
        }
    }
}

/// Exact, engine and Monte Carlo moments of an SDE over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeValidationConfig {
    pub scenario: Scenario,
    pub gamma: f64,
    /// Attractor of the linear scenarios.
    pub y: f64,
    /// Initial state of the linear scenarios.
    pub w0: f64,
    /// Times, snapped to multiples of `mc_dt`.
    #[serde(with = "grid_serde")]
    pub times: Vec<f64>,
    pub ode_steps: usize,
    /// Euler–Maruyama paths (0 skips Monte Carlo).
    pub mc_paths: usize,
    pub mc_dt: f64,
    pub quad_panels: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SdeValidationConfig {
    fn default() -> Self {
        SdeValidationConfig {
            scenario: Scenario::Constant { a: 1.0, b: 1.0 },
            gamma: 0.01,
            y: 1.0,
            w0: 0.0,
            times: log_grid(0.1, 10.0, 10).expect("static grid"),
            ode_steps: 2000,
            mc_paths: 4000,
            mc_dt: 1e-3,
            quad_panels: 64,
            seed: 0,
            threads: 0,
        }
    }
}

/// Any experiment, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ExperimentConfig {
    PhaseSweep(PhaseSweepConfig),
    TimeSweep(TimeSweepConfig),
    Heatmap(HeatmapConfig),
    SdeValidation(SdeValidationConfig),
    GfCurves(GfCurvesConfig),
}
