use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::weak_features::SpectrumSampler;
use crate::{Error, Result};

/// `[cli]` section: run-wide settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

/// `[mp_asymptotics]` section: large-system parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_beta_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_sq: Option<f64>,
}

/// `[weak_features]` section: model sizes and simulation knobs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakFeaturesSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_panels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SpectrumSampler>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsets: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sgd_seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

/// `[experiments]` section: grids and experiment-specific knobs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentsSection {
    /// Grid specification, e.g. `"1e-3:1e3:13:log"` or `"inf"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<String>,
    /// α grid specification, e.g. `"0.25:2:8"` or `"0.5,1.5"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finite_replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
}

/// A TOML configuration file; command-line flags override its values,
/// which override the built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub cli: CliSection,
    pub mp_asymptotics: MpSection,
    pub weak_features: WeakFeaturesSection,
    pub experiments: ExperimentsSection,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let err = FileConfig::parse("[weak_features]\nn = 3\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = FileConfig::parse("[nonsense]\n").unwrap_err();
        assert!(err.to_string().contains("nonsense"), "{err}");
    }

    #[test]
    fn sections_parse() {
        let c = FileConfig::parse(
            "[cli]\nseed = 7\n[mp_asymptotics]\nalpha = 0.5\n[weak_features]\nsampler = \"dense\"\n[experiments]\nt_grid = \"inf\"\n",
        )
        .unwrap();
        assert_eq!(c.cli.seed, Some(7));
        assert_eq!(c.mp_asymptotics.alpha, Some(0.5));
        assert_eq!(c.weak_features.sampler, Some(SpectrumSampler::Dense));
        assert_eq!(FileConfig::parse(&c.to_toml().unwrap()).unwrap(), c);
    }
}
