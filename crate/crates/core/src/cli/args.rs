use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::weak_features::SpectrumSampler;

/// Test-risk dynamics of gradient flow and stochastic gradient flow.
#[derive(Debug, Parser)]
#[command(name = "sgflow", version, about, long_about = None)]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: $SGFLOW_OUT_DIR or ./sgflow-out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed [default: 0]; always echoed into the metadata.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores [default: 0].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Do not print result tables to stdout.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Asymptotic GF risk and SGF correction over time.
    Theory(TheoryArgs),
    /// Finite-size expected GF risk, SGF correction and train error.
    Finite(FiniteArgs),
    /// Paired SGD and GD runs averaged over random subsets.
    Simulate(SimulateArgs),
    /// Time sweep: asymptotic and finite-size theory against simulation.
    Compare(CompareArgs),
    /// Phase sweep: large-time SGD − GD gap across alpha.
    Phase(PhaseArgs),
    /// Asymptotic SGF correction on a (t, alpha) grid.
    Heatmap(HeatmapArgs),
    /// GF risk curves with GD simulation and finite-size train error.
    GfCurves(GfCurvesArgs),
    /// Exact vs engine vs Monte Carlo moments of a test SDE.
    ValidateSde(ValidateSdeArgs),
    /// Marchenko–Pastur mass, mean and inverse moment.
    Mp(MpArgs),
}

/// Large-system parameters.
#[derive(Debug, Clone, Args)]
pub struct AsymptoticArgs {
    /// p/n [default: 0.5].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// d/n [default: 2.5].
    #[arg(long)]
    pub psi: Option<f64>,
    /// Label noise level [default: 0.5].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Learning rate times d [default: 1].
    #[arg(long)]
    pub gamma_prime: Option<f64>,
    /// Squared norm of the true coefficients [default: 1].
    #[arg(long)]
    pub norm_beta_sq: Option<f64>,
    /// Squared distance of the start from the truth [default: 2].
    #[arg(long)]
    pub delta_sq: Option<f64>,
}

/// Finite model sizes.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Samples [default: 80].
    #[arg(long)]
    pub n: Option<usize>,
    /// Features [default: 200].
    #[arg(long)]
    pub d: Option<usize>,
    /// Learned features [default: 40].
    #[arg(long)]
    pub p: Option<usize>,
    /// Label noise level [default: 0.5].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Learning rate times d [default: 1].
    #[arg(long)]
    pub gamma_prime: Option<f64>,
    /// Norm of the true coefficients [default: 1].
    #[arg(long)]
    pub norm_beta: Option<f64>,
}

/// Simulation scale shared by the sweep presets.
#[derive(Debug, Clone, Args)]
pub struct ScaleArgs {
    /// Samples [default: 80].
    #[arg(long)]
    pub n: Option<usize>,
    /// Features [default: 200].
    #[arg(long)]
    pub d: Option<usize>,
    /// Label noise level [default: 0.5].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Learning rate times d [default: 1].
    #[arg(long)]
    pub gamma_prime: Option<f64>,
    /// Norm of the true coefficients [default: 1].
    #[arg(long)]
    pub norm_beta: Option<f64>,
    /// Random feature subsets averaged per point.
    #[arg(long)]
    pub subsets: Option<usize>,
    /// SGD sample orders per subset [default: 1].
    #[arg(long)]
    pub sgd_seeds: Option<usize>,
    /// SGD mini-batch size [default: 1].
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// desk (d=200, n=80, 300 subsets) or paper (d=1000, n=400, 1000 subsets).
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Bidiagonal,
    Dense,
}

impl From<SamplerArg> for SpectrumSampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Bidiagonal => SpectrumSampler::Bidiagonal,
            SamplerArg::Dense => SpectrumSampler::Dense,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub params: AsymptoticArgs,
    /// min:max:points[:log], inf, or a comma list [default: 1e-3:1e3:13:log].
    #[arg(long, allow_hyphen_values = true)]
    pub t_grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct FiniteArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sampled spectra per point [default: 100].
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Gauss–Legendre panels for the time integral [default: 64].
    #[arg(long)]
    pub quad_panels: Option<usize>,
    /// Spectrum sampler [default: bidiagonal].
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerArg>,
    /// Time grid [default: 1e-3:1e3:13:log].
    #[arg(long, allow_hyphen_values = true)]
    pub t_grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Random feature subsets [default: 100].
    #[arg(long)]
    pub subsets: Option<usize>,
    /// SGD sample orders per subset [default: 1].
    #[arg(long)]
    pub sgd_seeds: Option<usize>,
    /// SGD mini-batch size [default: 1].
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Total SGD/GD iterations [default: 50 d].
    #[arg(long)]
    pub iters: Option<usize>,
    /// Record risks every this many iterations [default: iters/10].
    #[arg(long)]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scale: ScaleArgs,
    /// p/n [default: 0.5].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Time grid [default: 1e-3:1e3:13:log].
    #[arg(long, allow_hyphen_values = true)]
    pub t_grid: Option<String>,
    /// Spectra for the finite-size theory, 0 to skip [default: 100].
    #[arg(long)]
    pub finite_replicates: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub scale: ScaleArgs,
    /// Alpha grid [default: 0.125,0.25,0.5,0.75,1,1.25,1.5,2].
    #[arg(long)]
    pub alphas: Option<String>,
    /// Large time standing in for infinity [default: 50].
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    /// d/n [default: 2.5].
    #[arg(long)]
    pub psi: Option<f64>,
    /// Label noise level [default: 0.5].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Learning rate times d [default: 1].
    #[arg(long)]
    pub gamma_prime: Option<f64>,
    /// Alpha grid [default: 0.1:2.5:25].
    #[arg(long)]
    pub alphas: Option<String>,
    /// Time grid [default: 1e-3:1e3:13:log].
    #[arg(long, allow_hyphen_values = true)]
    pub t_grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GfCurvesArgs {
    #[command(flatten)]
    pub scale: ScaleArgs,
    /// Alpha grid [default: 0.25,0.5,0.75,1,1.25,1.5,2].
    #[arg(long)]
    pub alphas: Option<String>,
    /// Time grid [default: 0.1,1,10,100,inf].
    #[arg(long, allow_hyphen_values = true)]
    pub t_grid: Option<String>,
    /// Spectra for the finite-size train error, 0 to skip [default: 50].
    #[arg(long)]
    pub finite_replicates: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateSdeArgs {
    /// constant | pinning | timevarying | weakfeatures [default: constant].
    #[arg(long)]
    pub scenario: Option<String>,
    /// Learning rate [default: 0.01].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Time grid [default: 0.1:10:10:log].
    #[arg(long, allow_hyphen_values = true)]
    pub t_grid: Option<String>,
    /// Euler–Maruyama paths, 0 to skip Monte Carlo.
    #[arg(long)]
    pub mc_paths: Option<usize>,
    /// Euler–Maruyama step [default: 1e-3].
    #[arg(long)]
    pub mc_dt: Option<f64>,
    /// RK4 steps of the deterministic flow.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct MpArgs {
    /// Alpha list or grid [default: 0.1,0.25,0.5,0.9,1.1,2,4,10].
    #[arg(long)]
    pub alpha: Option<String>,
}
